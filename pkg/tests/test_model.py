import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import suite
from conftest import tri
from pareto_assign.milp import BINARY, CONTINUOUS
from pareto_assign.model import (
    PER_LINE,
    Assignment,
    AssignmentError,
    InfeasibleInstanceError,
    LineClass,
    build_milp,
    check_feasible,
    decode_assignment,
    encode_assignment,
    evaluate,
    validate_instance,
)
from pareto_assign.oracle import enumerate_assignments


# --- validation -------------------------------------------------------------

def test_tiny1_is_valid(tiny):
    assert validate_instance(tiny).violations == []


def test_class_mismatch_reported(tiny):
    req = np.array(tiny.requires)
    req[0, 1] = 1  # perishable P1 asks for non-perishable F2
    report = validate_instance(tiny.replace(requires=req))
    mism = [v for v in report.violations if v.startswith("class-mismatch")]
    assert len(mism) == 1
    assert "P1" in mism[0] and "F2" in mism[0]


def test_no_capable_line_reported(tiny):
    lines = list(tiny.lines)
    lines[1] = lines[1].__class__("L2", LineClass.NON_PERISHABLE, 1.0, frozenset())
    lines[2] = lines[2].__class__("L3", LineClass.HYBRID, 1.0, frozenset({0}))
    report = validate_instance(tiny.replace(lines=tuple(lines)))
    assert [v for v in report.violations if v.startswith("no-capable-line")] == ["no-capable-line: P2,F2"]


def test_dedicated_line_class_mismatch(tiny):
    lines = list(tiny.lines)
    lines[0] = lines[0].__class__("L1", LineClass.PERISHABLE, 1.0, frozenset({0, 1}))
    report = validate_instance(tiny.replace(lines=tuple(lines)))
    assert any(v.startswith("line-class-mismatch") for v in report.violations)


def test_bad_weights_and_rates(tiny):
    report = validate_instance(tiny.replace(weights=(0.5, 0.5, 0.5), reward_rate=-1.0))
    assert any(v.startswith("weights-invalid") for v in report.violations)
    assert "reward-rate-negative" in report.violations


def test_instance_tensors_are_read_only(tiny):
    with pytest.raises(ValueError):
        tiny.cost[0, 0, 0] = 1.0


# --- MILP encoding ----------------------------------------------------------

def _families(problem):
    out = {}
    for c in problem.constraints:
        fam = c.name.split("_")[0]
        out[fam] = out.get(fam, 0) + 1
    return out


def test_build_milp_tiny1_green_on(tiny):
    p = build_milp(tiny, True, exact_green=False)
    assert p.count(BINARY) == 6
    assert sum(1 for v in p.variables if v.kind == BINARY and v.name.startswith("x_")) == 4
    assert p.count(CONTINUOUS) == 2
    fam = _families(p)
    assert fam == {"cover": 2, "ability": 2, "cap": 3, "green": 6}
    assert len(p.constraints) == 2 + 0 + 2 + 3 + 5 + 1
    assert set(p.objectives) == {"z1", "z2", "z3"}
    assert [p.objectives[k].sense for k in ("z1", "z2", "z3")] == ["min", "max", "min"]


def test_build_milp_tiny1_green_off(tiny):
    on = build_milp(tiny, True, exact_green=False)
    off = build_milp(tiny, False)
    assert on.count(CONTINUOUS) - off.count(CONTINUOUS) == 2
    assert on.count(BINARY) - off.count(BINARY) == 2
    assert len(on.constraints) - len(off.constraints) == 6


def test_exact_green_adds_three_rows(tiny):
    assert len(build_milp(tiny, True).constraints) - len(build_milp(tiny, True, exact_green=False).constraints) == 3


def test_build_milp_singleton(single):
    p = build_milp(single, False)
    assert p.count(BINARY) == 1
    cover = [c for c in p.constraints if c.name.startswith("cover")]
    assert len(cover) == 1 and cover[0].sense == "=" and cover[0].rhs == 1.0


def test_incompatibility_rows(tiny):
    lines = list(tiny.lines)
    lines[2] = lines[2].__class__("L3", LineClass.HYBRID, 5.0, frozenset({0, 1}), frozenset({frozenset({0, 1})}))
    p = build_milp(tiny.replace(lines=tuple(lines)), False)
    # no product requires both features, so the pair produces no row
    assert not any(c.name.startswith("incompat") for c in p.constraints)


def test_green_bounds_use_derived_big_m(tiny):
    p = build_milp(tiny, True)
    gamma = tiny.avg_emission + float(tiny.emission.sum()) + 1
    assert tiny.big_m() == pytest.approx(gamma)
    for name in ("t_green", "e_green"):
        v = p.variables[p.index(name)]
        assert (v.lower, v.upper) == (0.0, pytest.approx(gamma))


def test_build_milp_rejects_invalid(tiny):
    req = np.array(tiny.requires)
    req[0, 1] = 1
    with pytest.raises(InfeasibleInstanceError):
        build_milp(tiny.replace(requires=req))


# --- evaluation -------------------------------------------------------------

def test_evaluate_penalty_regime(tiny):
    v = evaluate(tiny, tri(tiny, ("P1", "F1", "L1"), ("P2", "F2", "L2")), True)
    assert v.as_tuple() == pytest.approx((22.0, 1.75, 9.0))


def test_evaluate_at_average(tiny):
    a = tri(tiny, ("P1", "F1", "L1"), ("P2", "F2", "L3"))
    v = evaluate(tiny, a, True)
    assert v.as_tuple() == pytest.approx((19.0, 1.70, 7.0))
    assert a.t_green == a.e_green == 0.0
    assert not a.below_avg and not a.above_avg


def test_evaluate_reward_regime(tiny):
    a = tri(tiny, ("P1", "F1", "L3"), ("P2", "F2", "L2"))
    assert a.total_emission == 7.0
    cheap = tiny.replace(avg_emission=10.0)
    a = tri(cheap, ("P1", "F1", "L3"), ("P2", "F2", "L2"))
    assert a.e_green == 3.0 and a.below_avg
    assert evaluate(cheap, a, True).z1 == pytest.approx(20.0 - 3.0)


def test_evaluate_errors(tiny):
    with pytest.raises(AssignmentError, match="coverage"):
        evaluate(tiny, tri(tiny, ("P1", "F1", "L1")))
    with pytest.raises(AssignmentError, match="cannot run"):
        evaluate(tiny, tri(tiny, ("P1", "F1", "L2"), ("P2", "F2", "L2")))


def test_green_off_equivalence_on_suite():
    for _, inst in suite.suite()[:20]:
        for a in enumerate_assignments(inst):
            on, off = evaluate(inst, a, True), evaluate(inst, a, False)
            assert off.z1 == float(sum(inst.cost[t] for t in a.sorted_triples()))
            assert (on.z2, on.z3) == (off.z2, off.z3)
            assert a.t_green * a.e_green == 0.0


@settings(max_examples=200, deadline=None)
@given(g=st.lists(st.floats(0, 50, allow_nan=False), min_size=4, max_size=4), ag=st.floats(0, 100))
def test_green_complementarity_property(g, ag):
    inst = suite.tiny1()
    emission = np.zeros(inst.shape)
    for t, v in zip([(0, 0, 0), (0, 0, 2), (1, 1, 1), (1, 1, 2)], g):
        emission[t] = v
    inst = inst.replace(emission=emission, avg_emission=ag)
    for a in enumerate_assignments(inst):
        assert a.t_green >= 0 and a.e_green >= 0 and a.t_green * a.e_green == 0
        assert not (a.below_avg and a.above_avg)
        assert a.t_green == pytest.approx(max(0.0, a.total_emission - ag))


# --- feasibility ------------------------------------------------------------

def test_check_feasible_examples(tiny):
    assert check_feasible(tiny, tri(tiny, ("P1", "F1", "L1"), ("P2", "F2", "L2"))).feasible
    r = check_feasible(tiny, tri(tiny, ("P1", "F1", "L3"), ("P2", "F2", "L3")))
    assert r.failures() == {"capacity": ("L3",)}
    r = check_feasible(tiny, Assignment.from_triples(tiny, []))
    assert set(r.failures()) == {"coverage"}
    assert r.counts["coverage"] == 2


def test_hybrid_limit_modes(tiny):
    roomy = tiny.with_capacity_scale(2.0)
    a = tri(roomy, ("P1", "F1", "L3"), ("P2", "F2", "L3"))
    assert check_feasible(roomy, a).feasible
    assert check_feasible(roomy, a, hybrid_limit=PER_LINE).failures() == {"hybrid_ability": ("L3",)}


def _integral_points(inst, problem):
    """Exhaustive binary enumeration of X with the green block at closed form."""
    xs = [k for k, v in enumerate(problem.variables) if problem.roles.get(v.name, ("",))[0] == "x"]
    found = []
    for bits in itertools.product((0, 1), repeat=len(xs)):
        trip = [problem.roles[problem.variables[k].name][1:] for k, b in zip(xs, bits) if b]
        a = Assignment.from_triples(inst, trip)
        x = encode_assignment(inst, problem, a)
        if not problem.violations(x, 1e-7):
            found.append(a)
    return found


@pytest.mark.parametrize("green", [True, False])
def test_encoding_soundness_round_trip(green):
    for _, inst in suite.suite()[:-1]:
        problem = build_milp(inst, green)
        if len(inst.candidate_triples()) > 14:
            continue
        feasible = set(a.triples for a in enumerate_assignments(inst))
        for a in enumerate_assignments(inst):
            assert problem.violations(encode_assignment(inst, problem, a)) == []
        encoded = _integral_points(inst, problem)
        assert set(a.triples for a in encoded) == feasible
        for a in encoded:
            x = encode_assignment(inst, problem, a)
            assert decode_assignment(inst, problem, x).triples == a.triples
            assert check_feasible(inst, a).feasible


def test_capacity_monotone_relaxation():
    for _, inst in suite.suite()[:-1]:
        base = {a.triples for a in enumerate_assignments(inst)}
        for c in (1.0, 1.25, 2.0):
            assert base <= {a.triples for a in enumerate_assignments(inst.with_capacity_scale(c))}
