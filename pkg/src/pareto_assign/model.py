"""Domain types, MILP encoding and closed-form evaluation of the assignment model.

Products and features are either perishable or non-perishable; packaging
lines are dedicated to one of those classes or hybrid.  An assignment picks,
for every required (product, feature) pair, one capable line.  Three
objectives are tracked: cost including the green incentive (min), quality
(max) and raw CO2 emission (min).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .milp import BINARY, CONTINUOUS, EQ, LE, MAX, MIN, LinearExpr, MilpBuilder, MilpProblem

PER_ABILITY = "per_ability"
PER_LINE = "per_line"
HYBRID_LIMITS = (PER_ABILITY, PER_LINE)


class ProductClass(str, enum.Enum):
    PERISHABLE = "perishable"
    NON_PERISHABLE = "non_perishable"


class LineClass(str, enum.Enum):
    PERISHABLE = "perishable"
    NON_PERISHABLE = "non_perishable"
    HYBRID = "hybrid"

    def serves(self, cls: ProductClass) -> bool:
        return self is LineClass.HYBRID or self.value == cls.value


class InfeasibleInstanceError(ValueError):
    """Raised when an operation requires a well-formed instance and gets a broken one."""


class AssignmentError(ValueError):
    """Raised by :func:`evaluate` for incomplete coverage or an incapable line."""


@dataclass(frozen=True)
class Product:
    name: str
    cls: ProductClass


@dataclass(frozen=True)
class Feature:
    name: str
    cls: ProductClass


@dataclass(frozen=True)
class Line:
    name: str
    cls: LineClass
    capacity: float
    # feature indices this line can run
    supports: frozenset[int]
    # unordered pairs of feature indices that cannot share this line for one product
    incompatible: frozenset[frozenset[int]] = frozenset()


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """Full problem data.

    Tensors ``cost``, ``quality``, ``emission`` and ``resource`` have shape
    ``(products, features, lines)``; entries outside required/capable
    triples are ignored.  ``requires`` has shape ``(products, features)``.
    """

    products: tuple[Product, ...]
    features: tuple[Feature, ...]
    lines: tuple[Line, ...]
    requires: np.ndarray
    cost: np.ndarray
    quality: np.ndarray
    emission: np.ndarray
    resource: np.ndarray
    avg_emission: float
    penalty_rate: float
    reward_rate: float
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self) -> None:
        object.__setattr__(self, "requires", np.array(self.requires, dtype=int))
        self.requires.setflags(write=False)
        for name in ("cost", "quality", "emission", "resource"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.products == other.products
            and self.features == other.features
            and self.lines == other.lines
            and all(np.array_equal(getattr(self, k), getattr(other, k))
                    for k in ("requires", "cost", "quality", "emission", "resource"))
            and (self.avg_emission, self.penalty_rate, self.reward_rate, self.weights)
            == (other.avg_emission, other.penalty_rate, other.reward_rate, other.weights)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.products), len(self.features), len(self.lines)

    def required_pairs(self) -> list[tuple[int, int]]:
        """Required (product, feature) pairs in lexicographic index order."""
        n_i, n_j, _ = self.shape
        return [(i, j) for i in range(n_i) for j in range(n_j) if self.requires[i, j]]

    def capable_lines(self, i: int, j: int) -> list[int]:
        """Lines able to run feature ``j`` for product ``i`` (capability and class)."""
        cls = self.products[i].cls
        return [l for l, line in enumerate(self.lines)
                if j in line.supports and line.cls.serves(cls)]

    def candidate_triples(self) -> list[tuple[int, int, int]]:
        return [(i, j, l) for i, j in self.required_pairs() for l in self.capable_lines(i, j)]

    def big_m(self) -> float:
        """Per-instance big number: average emission plus every relevant emission, plus one."""
        total = sum(self.emission[t] for t in self.candidate_triples())
        return float(self.avg_emission + total + 1.0)

    def with_capacity_scale(self, scale: float) -> "Instance":
        lines = tuple(Line(ln.name, ln.cls, ln.capacity * scale, ln.supports, ln.incompatible)
                      for ln in self.lines)
        return self.replace(lines=lines)

    def replace(self, **changes) -> "Instance":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return Instance(**data)

    def triple_label(self, t: tuple[int, int, int]) -> tuple[str, str, str]:
        i, j, l = t
        return self.products[i].name, self.features[j].name, self.lines[l].name


@dataclass(frozen=True)
class ObjectiveVector:
    z1: float  # cost incl. green incentive
    z2: float  # quality sum
    z3: float  # raw emission

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.z1, self.z2, self.z3)

    def close_to(self, other: "ObjectiveVector", tol: float = 1e-6) -> bool:
        return all(abs(a - b) <= tol for a, b in zip(self.as_tuple(), other.as_tuple()))


# orientation of the three objectives: +1 minimize, -1 maximize
SENSES = (MIN, MAX, MIN)


@dataclass(frozen=True)
class Assignment:
    """A set of (product, feature, line) index triples plus derived green quantities."""

    triples: frozenset[tuple[int, int, int]]
    total_emission: float
    t_green: float
    e_green: float
    below_avg: bool
    above_avg: bool

    @classmethod
    def from_triples(cls, inst: Instance, triples: Iterable[tuple[int, int, int]]) -> "Assignment":
        trip = frozenset(tuple(int(v) for v in t) for t in triples)
        total = float(sum(inst.emission[t] for t in sorted(trip)))
        ag = inst.avg_emission
        return cls(trip, total, max(0.0, total - ag), max(0.0, ag - total), total < ag, total > ag)

    def sorted_triples(self) -> list[tuple[int, int, int]]:
        return sorted(self.triples)

    def labels(self, inst: Instance) -> list[tuple[str, str, str]]:
        return [inst.triple_label(t) for t in self.sorted_triples()]


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_instance(inst: Instance) -> ValidationReport:
    """Check every structural invariant of an instance; never raises."""
    report = ValidationReport()
    v = report.violations
    n_i, n_j, n_l = inst.shape
    expected = (n_i, n_j, n_l)
    if inst.requires.shape != (n_i, n_j):
        v.append(f"shape: requires has shape {inst.requires.shape}, expected {(n_i, n_j)}")
        return report
    for name in ("cost", "quality", "emission", "resource"):
        arr = getattr(inst, name)
        if arr.shape != expected:
            v.append(f"shape: {name} has shape {arr.shape}, expected {expected}")
    if v:
        return report
    names = [p.name for p in inst.products] + [f.name for f in inst.features] + [ln.name for ln in inst.lines]
    dupes = sorted({n for n in names if names.count(n) > 1})
    for d in dupes:
        v.append(f"duplicate-identifier: {d}")

    for i, p in enumerate(inst.products):
        for j, f in enumerate(inst.features):
            if inst.requires[i, j] not in (0, 1):
                v.append(f"requires-not-binary: {p.name},{f.name}")
            elif inst.requires[i, j] and p.cls != f.cls:
                v.append(f"class-mismatch: product {p.name} ({p.cls.value}) requires feature "
                         f"{f.name} ({f.cls.value})")
    for l, ln in enumerate(inst.lines):
        if not ln.capacity > 0:
            v.append(f"capacity-not-positive: {ln.name}")
        for j in sorted(ln.supports):
            if not 0 <= j < n_j:
                v.append(f"unknown-feature: line {ln.name} supports index {j}")
                continue
            f = inst.features[j]
            if ln.cls is not LineClass.HYBRID and ln.cls.value != f.cls.value:
                v.append(f"line-class-mismatch: {ln.cls.value} line {ln.name} supports {f.cls.value} "
                         f"feature {f.name}")
        for pair in ln.incompatible:
            if len(pair) != 2 or not all(0 <= j < n_j for j in pair):
                v.append(f"bad-incompatible-pair: line {ln.name} pair {sorted(pair)}")

    for i, j in inst.required_pairs():
        if inst.products[i].cls != inst.features[j].cls:
            continue
        lines = inst.capable_lines(i, j)
        if not lines:
            v.append(f"no-capable-line: {inst.products[i].name},{inst.features[j].name}")
        for l in lines:
            t = (i, j, l)
            label = ",".join(inst.triple_label(t))
            if not (math.isfinite(inst.cost[t]) and inst.cost[t] >= 0):
                v.append(f"cost-invalid: {label}")
            if not (math.isfinite(inst.quality[t]) and 0 <= inst.quality[t] <= 1):
                v.append(f"quality-invalid: {label}")
            if not (math.isfinite(inst.emission[t]) and inst.emission[t] >= 0):
                v.append(f"emission-invalid: {label}")
            if not (math.isfinite(inst.resource[t]) and inst.resource[t] > 0):
                v.append(f"resource-invalid: {label}")

    if inst.avg_emission < 0:
        v.append("avg-emission-negative")
    if inst.penalty_rate < 0:
        v.append("penalty-rate-negative")
    if inst.reward_rate < 0:
        v.append("reward-rate-negative")
    if len(inst.weights) != 3 or any(w < 0 for w in inst.weights) or abs(sum(inst.weights) - 1) > 1e-9:
        v.append(f"weights-invalid: {inst.weights}")
    return report


def _require_valid(inst: Instance) -> None:
    report = validate_instance(inst)
    if not report.ok:
        raise InfeasibleInstanceError("; ".join(report.violations))


def x_name(inst: Instance, t: tuple[int, int, int]) -> str:
    return "x_" + "_".join(inst.triple_label(t))


def build_milp(inst: Instance, green_enabled: bool = True, *, hybrid_limit: str = PER_ABILITY,
               exact_green: bool = True) -> MilpProblem:
    """Encode the assignment model as a mixed-binary program.

    Three objective rows are registered: ``z1`` (min), ``z2`` (max) and
    ``z3`` (min); ``z1`` is active.  With ``exact_green`` the green block
    carries three extra rows pinning TGreen/EGreen to their closed-form
    values under any objective, not only when cost is being minimized.
    """
    _require_valid(inst)
    if hybrid_limit not in HYBRID_LIMITS:
        raise ValueError(f"hybrid_limit must be one of {HYBRID_LIMITS}")
    b = MilpBuilder()
    xs: dict[tuple[int, int, int], int] = {}
    for t in inst.candidate_triples():
        xs[t] = b.add_var(x_name(inst, t), BINARY, role=("x",) + t)

    for i, j in inst.required_pairs():
        terms = {xs[(i, j, l)]: 1.0 for l in inst.capable_lines(i, j)}
        b.add_row(f"cover_{inst.products[i].name}_{inst.features[j].name}", terms, EQ, 1.0)

    for l, ln in enumerate(inst.lines):
        for pair in sorted(tuple(sorted(p)) for p in ln.incompatible):
            j1, j2 = pair
            for i in range(len(inst.products)):
                if (i, j1, l) in xs and (i, j2, l) in xs:
                    b.add_row(f"incompat_{ln.name}_{inst.products[i].name}_{inst.features[j1].name}_"
                              f"{inst.features[j2].name}", {xs[(i, j1, l)]: 1.0, xs[(i, j2, l)]: 1.0}, LE, 1.0)

    for l, ln in enumerate(inst.lines):
        if ln.cls is not LineClass.HYBRID:
            continue
        if hybrid_limit == PER_ABILITY:
            for j in sorted(ln.supports):
                terms = {k: 1.0 for t, k in xs.items() if t[2] == l and t[1] == j}
                if terms:
                    b.add_row(f"ability_{ln.name}_{inst.features[j].name}", terms, LE, 1.0)
        else:
            terms = {k: 1.0 for t, k in xs.items() if t[2] == l}
            if terms:
                b.add_row(f"ability_{ln.name}", terms, LE, 1.0)

    for l, ln in enumerate(inst.lines):
        terms = {k: float(inst.resource[t]) for t, k in xs.items() if t[2] == l}
        if terms:
            b.add_row(f"cap_{ln.name}", terms, LE, ln.capacity)

    cost = LinearExpr({k: float(inst.cost[t]) for t, k in xs.items()})
    quality = LinearExpr({k: float(inst.quality[t]) for t, k in xs.items()})
    emission = LinearExpr({k: float(inst.emission[t]) for t, k in xs.items()})

    if green_enabled:
        gamma = inst.big_m()
        ag = inst.avg_emission
        tg = b.add_var("t_green", CONTINUOUS, 0.0, gamma, role=("t_green",))
        eg = b.add_var("e_green", CONTINUOUS, 0.0, gamma, role=("e_green",))
        y1 = b.add_var("y_below", BINARY, role=("y_below",))
        y2 = b.add_var("y_above", BINARY, role=("y_above",))
        g = dict(emission.terms)

        def with_g(extra: dict[int, float], sign: float = 1.0) -> dict[int, float]:
            out = {k: sign * v for k, v in g.items()}
            out.update(extra)
            return out

        b.add_row("green_excess", with_g({tg: -1.0}), LE, ag)
        b.add_row("green_saving", with_g({eg: 1.0, y1: gamma}), LE, ag + gamma)
        b.add_row("green_below_flag", with_g({y1: -gamma}, -1.0), LE, -ag)
        b.add_row("green_above_flag", with_g({y2: -gamma}), LE, ag)
        b.add_row("green_saving_gate", {eg: 1.0, y1: -gamma}, LE, 0.0)
        if exact_green:
            # upper side of TGreen and lower side of EGreen
            b.add_row("green_excess_cap", with_g({tg: 1.0, y2: gamma}, -1.0), LE, gamma - ag)
            b.add_row("green_excess_gate", {tg: 1.0, y2: -gamma}, LE, 0.0)
            b.add_row("green_saving_floor", with_g({eg: -1.0, y1: gamma}, -1.0), LE, gamma - ag)
        b.add_row("green_flags", {y1: 1.0, y2: 1.0}, LE, 1.0)
        cost = cost + LinearExpr({tg: inst.penalty_rate, eg: -inst.reward_rate})

    b.set_objective("z1", cost, MIN, activate=True)
    b.set_objective("z2", quality, MAX)
    b.set_objective("z3", emission, MIN)
    return b.build()


def decode_assignment(inst: Instance, problem: MilpProblem, x: np.ndarray) -> Assignment:
    triples = []
    for k, v in enumerate(problem.variables):
        role = problem.roles.get(v.name)
        if role and role[0] == "x" and x[k] > 0.5:
            triples.append(role[1:])
    return Assignment.from_triples(inst, triples)


def encode_assignment(inst: Instance, problem: MilpProblem, a: Assignment) -> np.ndarray:
    """Variable vector for ``a``, green block set to closed-form values."""
    x = np.zeros(problem.n_vars)
    for k, v in enumerate(problem.variables):
        role = problem.roles.get(v.name)
        if not role:
            continue
        if role[0] == "x":
            x[k] = 1.0 if tuple(role[1:]) in a.triples else 0.0
        elif role[0] == "t_green":
            x[k] = a.t_green
        elif role[0] == "e_green":
            x[k] = a.e_green
        elif role[0] == "y_below":
            x[k] = float(a.below_avg)
        elif role[0] == "y_above":
            x[k] = float(a.above_avg)
    return x


def evaluate(inst: Instance, a: Assignment, green_enabled: bool = True) -> ObjectiveVector:
    """Closed-form objective values of an assignment."""
    required = set(inst.required_pairs())
    covered: dict[tuple[int, int], int] = {}
    for i, j, l in a.triples:
        if (i, j) not in required:
            raise AssignmentError(f"triple {inst.triple_label((i, j, l))} covers an unrequired pair")
        if l not in inst.capable_lines(i, j):
            raise AssignmentError(f"line {inst.lines[l].name} cannot run "
                                  f"{inst.products[i].name}/{inst.features[j].name}")
        covered[(i, j)] = covered.get((i, j), 0) + 1
    missing = [p for p in sorted(required) if covered.get(p, 0) != 1]
    if missing:
        i, j = missing[0]
        raise AssignmentError(f"incomplete coverage: {len(missing)} pair(s), first "
                              f"{inst.products[i].name},{inst.features[j].name}")
    trip = a.sorted_triples()
    z1 = float(sum(inst.cost[t] for t in trip))
    z2 = float(sum(inst.quality[t] for t in trip))
    z3 = float(sum(inst.emission[t] for t in trip))
    if green_enabled:
        z1 += inst.penalty_rate * a.t_green - inst.reward_rate * a.e_green
    return ObjectiveVector(z1, z2, z3)


@dataclass
class FeasibilityReport:
    # family -> first violating index tuple (as names), None when the family passes
    families: dict[str, tuple | None]
    # family -> number of violating index tuples
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return all(v is None for v in self.families.values())

    def __bool__(self) -> bool:
        return self.feasible

    def failures(self) -> dict[str, tuple]:
        return {k: v for k, v in self.families.items() if v is not None}


def check_feasible(inst: Instance, a: Assignment, *, hybrid_limit: str = PER_ABILITY) -> FeasibilityReport:
    """Check an assignment against coverage, class, incompatibility, hybrid-ability and capacity rules."""
    fam: dict[str, tuple | None] = {"coverage": None, "class": None, "incompatibility": None,
                                    "hybrid_ability": None, "capacity": None}
    required = inst.required_pairs()
    counts: dict[tuple[int, int], int] = {}
    n_i, n_j, n_l = inst.shape
    for t in a.sorted_triples():
        i, j, l = t
        if not (0 <= i < n_i and 0 <= j < n_j and 0 <= l < n_l):
            fam["class"] = fam["class"] or ("out-of-range",) + t
            continue
        counts[(i, j)] = counts.get((i, j), 0) + 1
        if fam["class"] is None and (not inst.requires[i, j] or l not in inst.capable_lines(i, j)):
            fam["class"] = inst.triple_label(t)
    bad = [p for p in required if counts.get(p, 0) != 1]
    bad += sorted(p for p in counts if p not in set(required))
    if bad:
        i, j = bad[0]
        fam["coverage"] = (inst.products[i].name, inst.features[j].name)

    for l, ln in enumerate(inst.lines):
        if fam["incompatibility"] is not None:
            break
        for pair in sorted(tuple(sorted(p)) for p in ln.incompatible):
            j1, j2 = pair
            hit = next((i for i in range(n_i) if (i, j1, l) in a.triples and (i, j2, l) in a.triples), None)
            if hit is not None:
                fam["incompatibility"] = (ln.name, inst.products[hit].name,
                                          inst.features[j1].name, inst.features[j2].name)
                break

    for l, ln in enumerate(inst.lines):
        if ln.cls is not LineClass.HYBRID or fam["hybrid_ability"] is not None:
            continue
        on_line = [t for t in a.sorted_triples() if t[2] == l]
        if hybrid_limit == PER_LINE:
            if len(on_line) > 1:
                fam["hybrid_ability"] = (ln.name,)
        else:
            for j in sorted(ln.supports):
                if sum(1 for t in on_line if t[1] == j) > 1:
                    fam["hybrid_ability"] = (ln.name, inst.features[j].name)
                    break

    overloaded = []
    for l, ln in enumerate(inst.lines):
        used = sum(inst.resource[t] for t in a.sorted_triples() if t[2] == l and 0 <= t[0] < n_i)
        if used > ln.capacity + 1e-9:
            overloaded.append(ln.name)
    if overloaded:
        fam["capacity"] = (overloaded[0],)
    return FeasibilityReport(fam, {"coverage": len(bad), "capacity": len(overloaded)})
