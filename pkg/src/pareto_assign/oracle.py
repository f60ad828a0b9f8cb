"""Brute-force ground truth for small instances.

Enumerates every feasible assignment, evaluates it in closed form and keeps
the exact Pareto set.  Nothing here touches the MILP encoding or the solver,
so it can certify both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .model import PER_ABILITY, Assignment, Instance, ObjectiveVector, check_feasible, evaluate

ENUMERATION_GUARD = 1_000_000


class EnumerationTooLargeError(ValueError):
    """The instance has more candidate assignments than the enumeration guard allows."""


def assignment_space(inst: Instance) -> int:
    return math.prod(len(inst.capable_lines(i, j)) for i, j in inst.required_pairs())


def enumerate_assignments(inst: Instance, *, hybrid_limit: str = PER_ABILITY,
                          guard: int = ENUMERATION_GUARD) -> Iterator[Assignment]:
    """Yield every feasible assignment once, in lexicographic order of line choices."""
    pairs = inst.required_pairs()
    choices = [inst.capable_lines(i, j) for i, j in pairs]
    size = math.prod(len(c) for c in choices)
    if size > guard:
        raise EnumerationTooLargeError(f"{size} candidate assignments exceed the guard of {guard}")
    for combo in itertools.product(*choices):
        a = Assignment.from_triples(inst, [(i, j, l) for (i, j), l in zip(pairs, combo)])
        if check_feasible(inst, a, hybrid_limit=hybrid_limit).feasible:
            yield a


def _worse_or_equal(a: Sequence[float], b: Sequence[float]) -> bool:
    # a is no better than b in every objective (cost min, quality max, emission min)
    return a[0] >= b[0] and a[1] <= b[1] and a[2] >= b[2]


def pareto_indices(vectors: Sequence[Sequence[float]]) -> list[int]:
    """Indices of vectors not weakly dominated by any other (duplicates all kept)."""
    keep = []
    for k, v in enumerate(vectors):
        dominated = any(_worse_or_equal(v, u) and tuple(u) != tuple(v) for u in vectors)
        if not dominated:
            keep.append(k)
    return keep


@dataclass(frozen=True)
class OracleFront:
    assignments: tuple[Assignment, ...]
    vectors: tuple[ObjectiveVector, ...]
    pareto: tuple[ObjectiveVector, ...]  # distinct Pareto vectors in enumeration order
    pareto_assignments: tuple[Assignment, ...]

    @property
    def n_feasible(self) -> int:
        return len(self.assignments)

    def contains(self, v: ObjectiveVector, tol: float = 1e-6) -> bool:
        return any(v.close_to(p, tol) for p in self.pareto)

    def optimum(self, k: int) -> float:
        col = [v.as_tuple()[k] for v in self.vectors]
        return max(col) if k == 1 else min(col)


def brute_force_pareto(inst: Instance, green_enabled: bool = True, *, hybrid_limit: str = PER_ABILITY,
                       guard: int = ENUMERATION_GUARD) -> OracleFront:
    assigns = list(enumerate_assignments(inst, hybrid_limit=hybrid_limit, guard=guard))
    vecs = [evaluate(inst, a, green_enabled) for a in assigns]
    tuples = [v.as_tuple() for v in vecs]
    seen: set[tuple[float, float, float]] = set()
    front, front_a = [], []
    for k in pareto_indices(tuples):
        if tuples[k] not in seen:
            seen.add(tuples[k])
            front.append(vecs[k])
            front_a.append(assigns[k])
    return OracleFront(tuple(assigns), tuple(vecs), tuple(front), tuple(front_a))


@dataclass(frozen=True)
class ComparisonReport:
    size_a: int
    size_b: int
    a_dominated_by_b: int
    b_dominated_by_a: int
    # one row per point of ``a``: (index in a, index in b, dz1, dz2, dz3) with d = b - a
    matched: tuple[tuple[int, int, float, float, float], ...]

    def lines(self, label_a: str = "a", label_b: str = "b") -> list[str]:
        out = [f"{label_a}: {self.size_a} points, {self.a_dominated_by_b} dominated by {label_b}",
               f"{label_b}: {self.size_b} points, {self.b_dominated_by_a} dominated by {label_a}"]
        for ia, ib, d1, d2, d3 in self.matched:
            out.append(f"  {label_a}[{ia}] ~ {label_b}[{ib}]: dz1={d1:+.3f} dz2={d2:+.3f} dz3={d3:+.3f}")
        return out


def compare_fronts(a, b) -> ComparisonReport:
    """Cross-domination counts and nearest-quality matched deltas between two fronts.

    ``a`` and ``b`` may be frontier results or plain sequences of objective
    vectors (tuples of length 2 or 3; a missing emission is taken as equal).
    """
    va, vb = _as_vectors(a), _as_vectors(b)

    def dominated_count(xs, ys):
        return sum(1 for x in xs if any(_worse_or_equal(x, y) and tuple(x) != tuple(y) for y in ys))

    matched = []
    if vb:
        for ia, x in enumerate(va):
            ib = min(range(len(vb)), key=lambda k: (abs(vb[k][1] - x[1]), k))
            y = vb[ib]
            matched.append((ia, ib, y[0] - x[0], y[1] - x[1], y[2] - x[2]))
    return ComparisonReport(len(va), len(vb), dominated_count(va, vb), dominated_count(vb, va), tuple(matched))


def _as_vectors(front) -> list[tuple[float, float, float]]:
    if hasattr(front, "points"):
        return [p.objectives.as_tuple() for p in front.points]
    out = []
    for v in front:
        if isinstance(v, ObjectiveVector):
            out.append(v.as_tuple())
        else:
            t = tuple(float(x) for x in v)
            out.append(t if len(t) == 3 else (t[0], t[1], 0.0))
    return out
