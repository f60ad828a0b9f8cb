"""Pareto-front generation: payoff tables, AUGMECON2 and AUGMECON2VIKOR.

Objectives are indexed 0, 1, 2 for cost (min), quality (max) and emission
(min).  Every reported objective vector is recomputed in closed form from the
decoded assignment; solver-side values (green variables, S and R) are kept
alongside for cross-checking.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .milp import CONTINUOUS, EQ, GE, LE, MAX, MIN, LinearExpr, MilpProblem, expr_bound
from .model import (
    PER_ABILITY,
    SENSES,
    Assignment,
    Instance,
    ObjectiveVector,
    build_milp,
    decode_assignment,
    evaluate,
)
from .solver import MilpSolution, solve_milp

log = logging.getLogger(__name__)

OBJ_NAMES = ("z1", "z2", "z3")
AUGMECON2 = "augmecon2"
AUGMECON2VIKOR = "augmecon2vikor"
VEC_TOL = 1e-6
_FIX_TOL = 1e-7


class DegenerateRangeError(ValueError):
    """Every objective has a zero range in the payoff table."""


class NoFeasibleAssignmentError(RuntimeError):
    """The instance admits no feasible assignment."""


@dataclass(frozen=True)
class FrontierConfig:
    method: str = AUGMECON2VIKOR
    grid_count: int = 5
    eps: float = 1e-3
    weights: tuple[float, float, float] | None = None  # None -> instance weights
    bypass: bool = True
    hybrid_limit: str = PER_ABILITY
    green_enabled: bool = True
    # main objective first, then constrained objectives innermost-first
    objective_order: tuple[int, int, int] = (0, 1, 2)
    vikor_s_sense: str = MIN
    polish: bool = True
    exact_green: bool = True
    node_limit: int = 1_000_000
    workers: int | None = None

    def __post_init__(self) -> None:
        if self.method not in (AUGMECON2, AUGMECON2VIKOR):
            raise ValueError(f"unknown method {self.method!r}")
        if self.grid_count < 1:
            raise ValueError("grid_count must be >= 1")
        if not 1e-6 <= self.eps <= 1e-3:
            raise ValueError("eps must lie in [1e-6, 1e-3]")
        if sorted(self.objective_order) != [0, 1, 2]:
            raise ValueError("objective_order must be a permutation of (0, 1, 2)")
        if self.vikor_s_sense not in (MIN, MAX):
            raise ValueError("vikor_s_sense must be 'min' or 'max'")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != 3 or any(x < 0 for x in w) or abs(sum(w) - 1) > 1e-9:
                raise ValueError("weights must be three non-negative numbers summing to 1")
            object.__setattr__(self, "weights", w)

    def weights_for(self, inst: Instance) -> tuple[float, float, float]:
        return self.weights if self.weights is not None else inst.weights

    def n_workers(self) -> int:
        if self.workers is not None:
            return max(1, self.workers)
        env = os.environ.get("PARETO_ASSIGN_THREADS")
        return max(1, int(env)) if env and env.isdigit() else 1


@dataclass(frozen=True)
class PayoffTable:
    rows: tuple[ObjectiveVector, ...]
    ideal: tuple[float, float, float]
    nadir: tuple[float, float, float]
    ranges: tuple[float, float, float]
    assignments: tuple[Assignment, ...] = ()

    @property
    def degenerate(self) -> tuple[bool, bool, bool]:
        return tuple(r <= VEC_TOL for r in self.ranges)  # type: ignore[return-value]

    @classmethod
    def from_rows(cls, rows: Sequence[ObjectiveVector], assignments: Sequence[Assignment] = ()) -> "PayoffTable":
        cols = list(zip(*(r.as_tuple() for r in rows)))
        ideal, nadir = [], []
        for k, sense in enumerate(SENSES):
            best, worst = (min, max) if sense == MIN else (max, min)
            ideal.append(best(cols[k]))
            nadir.append(worst(cols[k]))
        ranges = tuple(abs(a - b) for a, b in zip(ideal, nadir))
        return cls(tuple(rows), tuple(ideal), tuple(nadir), ranges, tuple(assignments))  # type: ignore[arg-type]


@dataclass(frozen=True)
class ParetoPoint:
    objectives: ObjectiveVector
    assignment: Assignment
    grid_index: int
    s_value: float | None = None
    r_value: float | None = None
    # (TGreen, EGreen) as returned by the solver; None when green is off
    solver_green: tuple[float, float] | None = None


@dataclass(frozen=True)
class FrontierResult:
    method: str
    config: FrontierConfig
    points: tuple[ParetoPoint, ...]
    payoff: PayoffTable | None
    # every solved sub-problem in solve order: (grid_index, point)
    sweep: tuple[tuple[int, ParetoPoint], ...] = ()
    subproblems: int = 0
    nodes: int = 0
    info: dict = field(default_factory=dict)

    def vectors(self) -> list[tuple[float, float, float]]:
        return [p.objectives.as_tuple() for p in self.points]


def dominates(a: Sequence[float], b: Sequence[float], tol: float = 0.0) -> bool:
    """Weak dominance of ``a`` over ``b`` under (min, max, min)."""
    better = False
    for k, sense in enumerate(SENSES):
        diff = (b[k] - a[k]) if sense == MIN else (a[k] - b[k])
        if diff < -tol:
            return False
        if diff > tol:
            better = True
    return better


def dominance_filter(points: Sequence[ParetoPoint], tol: float = 0.0) -> list[ParetoPoint]:
    """Keep the points no other point weakly dominates, preserving input order."""
    vecs = [p.objectives.as_tuple() for p in points]
    return [p for k, p in enumerate(points)
            if not any(dominates(vecs[m], vecs[k], tol) for m in range(len(points)) if m != k)]


def _dedup(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    out: list[ParetoPoint] = []
    for p in points:
        if not any(p.objectives.close_to(q.objectives, VEC_TOL) for q in out):
            out.append(p)
    return out


def _solve(problem: MilpProblem, cfg: FrontierConfig) -> MilpSolution:
    return solve_milp(problem, node_limit=cfg.node_limit)


def _fix_row(expr: LinearExpr, sense: str, value: float) -> tuple[str, float]:
    # hold an objective at its optimum, one-sided with a small slack
    return (LE, value + _FIX_TOL) if sense == MIN else (GE, value - _FIX_TOL)


def lexicographic(problem: MilpProblem, order: Sequence[str], cfg: FrontierConfig) -> tuple[MilpSolution, int]:
    """Optimize the named objective rows of ``problem`` one after another.

    Each stage keeps the previous objectives at their optima.  Returns the
    final solution and the total node count.
    """
    current = problem
    nodes = 0
    sol: MilpSolution | None = None
    for stage, name in enumerate(order):
        sol = _solve(current.with_objective(name), cfg)
        nodes += sol.nodes
        if not sol.optimal:
            return sol, nodes
        if stage < len(order) - 1:
            obj = current.objectives[name]
            b = current.builder()
            sense, rhs = _fix_row(obj.expr, obj.sense, sol.objective)
            b.add_expr_row(f"lex_{name}", obj.expr, sense, rhs)
            current = b.build()
    assert sol is not None
    return sol, nodes


def _base(inst: Instance, cfg: FrontierConfig) -> MilpProblem:
    return build_milp(inst, cfg.green_enabled, hybrid_limit=cfg.hybrid_limit, exact_green=cfg.exact_green)


def payoff_table_lex(inst: Instance, cfg: FrontierConfig | None = None) -> PayoffTable:
    """Payoff table whose row ``k`` lexicographically optimizes objective ``k`` first."""
    cfg = cfg or FrontierConfig()
    base = _base(inst, cfg)
    rows, assigns = [], []
    for k in range(3):
        order = [OBJ_NAMES[k]] + [OBJ_NAMES[m] for m in range(3) if m != k]
        sol, _ = lexicographic(base, order, cfg)
        if not sol.optimal:
            raise NoFeasibleAssignmentError("no feasible assignment exists")
        a = decode_assignment(inst, base, sol.x)
        assigns.append(a)
        rows.append(evaluate(inst, a, cfg.green_enabled))
    pt = PayoffTable.from_rows(rows, assigns)
    for k, flag in enumerate(pt.degenerate):
        if flag:
            log.warning("objective %s is constant over the payoff table (degenerate range)", OBJ_NAMES[k])
    return pt


def _make_point(inst: Instance, problem: MilpProblem, sol: MilpSolution, cfg: FrontierConfig,
                grid_index: int, s_value: float | None = None, r_value: float | None = None) -> ParetoPoint:
    a = decode_assignment(inst, problem, sol.x)
    green = None
    if cfg.green_enabled:
        green = (float(sol.x[problem.index("t_green")]), float(sol.x[problem.index("e_green")]))
    return ParetoPoint(evaluate(inst, a, cfg.green_enabled), a, grid_index, s_value, r_value, green)


def _finish(points: Sequence[ParetoPoint]) -> tuple[ParetoPoint, ...]:
    return tuple(dominance_filter(_dedup(points)))


# --------------------------------------------------------------------------- AUGMECON2


def augmecon2(inst: Instance, cfg: FrontierConfig | None = None) -> FrontierResult:
    """Augmented epsilon-constraint sweep with the bypass acceleration.

    The main objective (first in ``cfg.objective_order``) is optimized while
    the other two are bounded by a grid of ``grid_count + 1`` values each,
    through equality rows with non-negative surplus variables.  The surpluses
    enter the objective as ``eps * (S_in / r_in + 0.1 * S_out / r_out)``.
    """
    cfg = cfg or FrontierConfig(method=AUGMECON2)
    try:
        pt = payoff_table_lex(inst, cfg)
    except NoFeasibleAssignmentError:
        return FrontierResult(AUGMECON2, cfg, (), None)
    base = _base(inst, cfg)
    main, *constrained = cfg.objective_order
    n = cfg.grid_count

    dims = []  # (objective index, lb, ub, range, step) in max-form
    for k in constrained:
        if pt.degenerate[k]:
            log.warning("objective %s not gridded: zero range", OBJ_NAMES[k])
            continue
        s = 1.0 if SENSES[k] == MAX else -1.0
        lb, ub = s * pt.nadir[k], s * pt.ideal[k]
        dims.append((k, lb, ub, ub - lb, (ub - lb) / n))

    b = base.builder()
    main_obj = base.objectives[OBJ_NAMES[main]]
    aug = LinearExpr({})
    surplus_idx = []
    for depth, (k, lb, ub, rng, step) in enumerate(dims):
        sv = b.add_var(f"surplus_{OBJ_NAMES[k]}", CONTINUOUS, 0.0, rng + 1.0, role=("surplus", k))
        surplus_idx.append(sv)
        aug = aug + LinearExpr({sv: 10.0 ** (-depth) / rng})
    aug = aug.scaled(cfg.eps)
    if main_obj.sense == MIN:
        expr = main_obj.expr - aug
    else:
        expr = main_obj.expr + aug
    b.set_objective("augmented", expr, main_obj.sense, activate=True)
    template = b.build()

    def grid_value(d, i):
        _, lb, ub, _, step = d
        return ub if i == n else lb + i * step

    def subproblem(idx: tuple[int, ...]) -> MilpProblem:
        bb = template.builder()
        for d, i, sv in zip(dims, idx, surplus_idx):
            k = d[0]
            s = 1.0 if SENSES[k] == MAX else -1.0
            row = base.objectives[OBJ_NAMES[k]].expr.scaled(s) - LinearExpr({sv: 1.0})
            bb.add_expr_row(f"eps_{OBJ_NAMES[k]}", row, EQ, grid_value(d, i))
        return bb.build()

    sweep: list[tuple[int, ParetoPoint]] = []
    counters = {"subproblems": 0, "nodes": 0}

    def run(idx: tuple[int, ...]) -> MilpSolution:
        sol = _solve(subproblem(idx), cfg)
        counters["subproblems"] += 1
        counters["nodes"] += sol.nodes
        return sol

    def flat(idx: tuple[int, ...]) -> int:
        g = 0
        for i in reversed(idx):
            g = g * (n + 1) + i
        return g

    if not dims:
        sol = run(())
        if sol.optimal:
            sweep.append((0, _make_point(inst, template, sol, cfg, 0)))
    elif not cfg.bypass and cfg.n_workers() > 1:
        cells = _cells(len(dims), n)
        problems = [subproblem(c) for c in cells]
        with ProcessPoolExecutor(cfg.n_workers()) as ex:
            sols = list(ex.map(solve_milp, problems, chunksize=4))
        counters["subproblems"] = len(sols)
        counters["nodes"] = sum(s.nodes for s in sols)
        for c, s in zip(cells, sols):
            if s.optimal:
                sweep.append((flat(c), _make_point(inst, template, s, cfg, flat(c))))
    else:
        inner = dims[0]
        outer_range = range(n + 1) if len(dims) > 1 else range(1)
        for io in outer_range:
            ii = 0
            while ii <= n:
                idx = (ii, io) if len(dims) > 1 else (ii,)
                sol = run(idx)
                if not sol.optimal:
                    break  # tighter inner bounds stay infeasible
                g = flat(idx)
                sweep.append((g, _make_point(inst, template, sol, cfg, g)))
                jump = 0
                if cfg.bypass:
                    s_in = float(sol.x[surplus_idx[0]])
                    jump = int(math.floor(s_in / inner[4] + 1e-9))
                ii += jump + 1

    points = _finish([p for _, p in sweep])
    return FrontierResult(AUGMECON2, cfg, points, pt, tuple(sweep), counters["subproblems"], counters["nodes"],
                          {"grid": [(OBJ_NAMES[d[0]], d[1], d[2]) for d in dims]})


def _cells(ndims: int, n: int) -> list[tuple[int, ...]]:
    if ndims == 1:
        return [(i,) for i in range(n + 1)]
    return [(ii, io) for io in range(n + 1) for ii in range(n + 1)]


# --------------------------------------------------------------------------- VIKOR


def _terms(v: Sequence[float], pt: PayoffTable, w: Sequence[float]) -> list[float]:
    out = []
    for k in range(3):
        if pt.degenerate[k]:
            out.append(0.0)
            continue
        out.append(w[k] * (pt.ideal[k] - v[k]) / (pt.ideal[k] - pt.nadir[k]))
    return out


def vikor_sr(v: ObjectiveVector | Sequence[float], pt: PayoffTable, w: Sequence[float]) -> tuple[float, float]:
    """Group regret ``S`` and individual regret ``R`` of an objective vector.

    Each term is ``w_k (f*_k - v_k) / (f*_k - f-_k)`` with ``f*`` the best
    value of objective ``k``; the term is 0 at the ideal and ``w_k`` at the
    nadir whether the objective is minimized or maximized.  Objectives with
    zero range are dropped.
    """
    vec = v.as_tuple() if isinstance(v, ObjectiveVector) else tuple(v)
    if all(pt.degenerate):
        raise DegenerateRangeError("all objectives have zero range")
    terms = [t for k, t in enumerate(_terms(vec, pt, w)) if not pt.degenerate[k]]
    return float(sum(terms)), float(max(terms))


def build_sr_model(inst: Instance, pt: PayoffTable, w: Sequence[float], cfg: FrontierConfig | None = None,
                   base: MilpProblem | None = None) -> MilpProblem:
    """Extend the assignment encoding with ``S`` (weighted regret sum) and ``R`` (max regret).

    ``S`` is pinned by an equality row; ``R`` sits above every regret term,
    which is exact whenever ``R`` is minimized.  Objective rows ``R`` (min)
    and ``S`` (sense from ``cfg.vikor_s_sense``) are registered.
    """
    cfg = cfg or FrontierConfig()
    if all(pt.degenerate):
        raise DegenerateRangeError("all objectives have zero range")
    base = base or _base(inst, cfg)
    terms: list[LinearExpr] = []
    for k in range(3):
        if pt.degenerate[k]:
            terms.append(LinearExpr({}))
            continue
        scale = w[k] / (pt.ideal[k] - pt.nadir[k])
        expr = base.objectives[OBJ_NAMES[k]].expr
        # w (f* - f(x)) / (f* - f-)
        terms.append(LinearExpr({i: -c * scale for i, c in expr.terms.items()},
                                (pt.ideal[k] - expr.constant) * scale))
    s_expr = terms[0] + terms[1] + terms[2]
    bound = max(expr_bound(t, base.variables) for t in terms) + 1.0
    s_bound = expr_bound(s_expr, base.variables) + 1.0
    b = base.builder()
    s_var = b.add_var("vikor_S", CONTINUOUS, -s_bound, s_bound, role=("S",))
    r_var = b.add_var("vikor_R", CONTINUOUS, -bound, bound, role=("R",))
    b.add_expr_row("vikor_S_def", s_expr - LinearExpr({s_var: 1.0}), EQ, 0.0)
    for k, t in enumerate(terms):
        b.add_expr_row(f"vikor_R_{OBJ_NAMES[k]}", t - LinearExpr({r_var: 1.0}), LE, 0.0)
    b.set_objective("R", LinearExpr({r_var: 1.0}), MIN)
    b.set_objective("S", LinearExpr({s_var: 1.0}), cfg.vikor_s_sense)
    b.active = "R"
    return b.build()


def _polish(problem: MilpProblem, sol: MilpSolution, pt: PayoffTable, cfg: FrontierConfig) -> tuple[MilpSolution, int]:
    """Move a solution to a Pareto-optimal point that weakly dominates it.

    Objectives are capped at their current values and a positive combination
    of the normalized objectives plus ``R`` is minimized; ``R`` cannot grow
    and ends equal to its largest regret term.
    """
    b = problem.builder()
    combo = LinearExpr({})
    for k, name in enumerate(OBJ_NAMES):
        obj = problem.objectives[name]
        value = obj.expr.value(sol.x)
        sense, rhs = _fix_row(obj.expr, obj.sense, value)
        b.add_expr_row(f"polish_{name}", obj.expr, sense, rhs)
        scale = pt.ranges[k] if pt.ranges[k] > VEC_TOL else 1.0
        combo = combo + obj.expr.scaled((1.0 if obj.sense == MIN else -1.0) / scale)
    combo = combo + problem.objectives["R"].expr
    b.set_objective("polish", combo, MIN, activate=True)
    out = _solve(b.build(), cfg)
    return (out if out.optimal else sol), out.nodes


def _vikor_point(inst: Instance, problem: MilpProblem, sol: MilpSolution, cfg: FrontierConfig, p: int) -> ParetoPoint:
    s = float(sol.x[problem.index("vikor_S")])
    r = float(sol.x[problem.index("vikor_R")])
    return _make_point(inst, problem, sol, cfg, p, s, r)


def _model3(model2: MilpProblem, s_min: float, s_range: float, p: int, e: float, cfg: FrontierConfig) -> MilpProblem:
    b = model2.builder()
    s_idx = model2.index("vikor_S")
    s_var = model2.variables[s_idx]
    slack = b.add_var("vikor_slack", CONTINUOUS, 0.0, 2 * s_var.upper + s_range, role=("slack",))
    b.add_row("vikor_grid", {s_idx: 1.0, slack: 1.0}, EQ, s_min + p * e)
    pull = cfg.eps / s_range
    # literal form penalizes the slack; the min-S reading rewards it
    coef = pull if cfg.vikor_s_sense == MAX else -pull
    b.set_objective("model3", LinearExpr({model2.index("vikor_R"): 1.0, slack: coef}), MIN, activate=True)
    return b.build()


def _solve_model3(args) -> tuple[MilpSolution, int, MilpProblem]:
    problem, pt, cfg = args
    sol = solve_milp(problem, node_limit=cfg.node_limit)
    nodes = sol.nodes
    if sol.optimal and cfg.polish:
        sol, extra = _polish(problem, sol, pt, cfg)
        nodes += extra
    return sol, nodes, problem


def augmecon2vikor(inst: Instance, cfg: FrontierConfig | None = None) -> FrontierResult:
    """Sweep the VIKOR group regret ``S`` on a grid while minimizing the maximum regret ``R``.

    Model 2 (``R`` and ``S`` over the assignment constraints) is first solved
    lexicographically in both orders to get the range of ``S``.  Then for
    ``p = 1..N`` Model 3 minimizes ``R + eps * slack / S_range`` subject to
    ``S + slack = S_min + p * S_range / N``.  Solutions are deduplicated on
    their objective vectors and dominance-filtered.
    """
    cfg = cfg or FrontierConfig(method=AUGMECON2VIKOR)
    w = cfg.weights_for(inst)
    try:
        pt = payoff_table_lex(inst, cfg)
    except NoFeasibleAssignmentError:
        return FrontierResult(AUGMECON2VIKOR, cfg, (), None)
    if all(pt.degenerate):
        a = pt.assignments[0]
        point = ParetoPoint(pt.rows[0], a, 0, 0.0, 0.0, (a.t_green, a.e_green) if cfg.green_enabled else None)
        return FrontierResult(AUGMECON2VIKOR, cfg, (point,), pt, ((0, point),), 0, 0, {"degenerate": True})

    model2 = build_sr_model(inst, pt, w, cfg)
    nodes = 0
    r_first, n1 = lexicographic(model2, ["R", "S"], cfg)
    s_first, n2 = lexicographic(model2, ["S", "R"], cfg)
    nodes += n1 + n2
    s_idx = model2.index("vikor_S")
    s_vals = [float(r_first.x[s_idx]), float(s_first.x[s_idx])]
    s_min, s_max = min(s_vals), max(s_vals)
    s_range = s_max - s_min
    info = {"S_min": s_min, "S_max": s_max, "S_range": s_range,
            "model2_rows": [{"R": float(sol.x[model2.index("vikor_R")]), "S": float(sol.x[s_idx])}
                            for sol in (r_first, s_first)]}
    subproblems = 4

    if s_range <= VEC_TOL:
        sol = r_first
        if cfg.polish:
            sol, extra = _polish(model2, sol, pt, cfg)
            nodes += extra
            subproblems += 1
        point = _vikor_point(inst, model2, sol, cfg, 0)
        info["degenerate_S"] = True
        return FrontierResult(AUGMECON2VIKOR, cfg, (point,), pt, ((0, point),), subproblems, nodes, info)

    e = s_range / cfg.grid_count
    info["e"] = e
    jobs = [(_model3(model2, s_min, s_range, p, e, cfg), pt, cfg) for p in range(1, cfg.grid_count + 1)]
    if cfg.n_workers() > 1:
        with ProcessPoolExecutor(cfg.n_workers()) as ex:
            outcomes = list(ex.map(_solve_model3, jobs))
    else:
        outcomes = [_solve_model3(j) for j in jobs]

    sweep = []
    for p, (sol, n_p, problem) in enumerate(outcomes, start=1):
        nodes += n_p
        subproblems += 1 + int(cfg.polish)
        if sol.optimal:
            sweep.append((p, _vikor_point(inst, problem, sol, cfg, p)))
    points = _finish([pnt for _, pnt in sweep])
    return FrontierResult(AUGMECON2VIKOR, cfg, points, pt, tuple(sweep), subproblems, nodes, info)


def run_frontier(inst: Instance, cfg: FrontierConfig) -> FrontierResult:
    if cfg.method == AUGMECON2:
        return augmecon2(inst, cfg)
    return augmecon2vikor(inst, cfg)


def normalized_quality(inst: Instance, v: ObjectiveVector) -> float:
    pairs = len(inst.required_pairs())
    return v.z2 / pairs if pairs else 0.0


__all__ = [
    "AUGMECON2",
    "AUGMECON2VIKOR",
    "DegenerateRangeError",
    "FrontierConfig",
    "FrontierResult",
    "NoFeasibleAssignmentError",
    "ParetoPoint",
    "PayoffTable",
    "augmecon2",
    "augmecon2vikor",
    "build_sr_model",
    "dominance_filter",
    "dominates",
    "lexicographic",
    "normalized_quality",
    "payoff_table_lex",
    "run_frontier",
    "vikor_sr",
]

