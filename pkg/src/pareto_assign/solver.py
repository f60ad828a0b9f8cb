"""Exact solver for :class:`~pareto_assign.milp.MilpProblem`.

``solve_lp`` is a two-phase bounded-variable primal simplex on a dense
tableau.  Pricing is Dantzig's rule, switching to Bland's smallest-index rule
after a run of degenerate pivots so cycling cannot occur.  ``solve_milp`` is
best-bound branch-and-bound on the binaries, branching on the most fractional
one (lowest index on ties).
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .milp import MAX, MilpProblem

FEAS_TOL = 1e-7
INT_TOL = 1e-6
OBJ_TOL = 1e-6
_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_DEGENERATE_STREAK = 20

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class NodeLimitError(RuntimeError):
    """Branch-and-bound exceeded its node budget."""


@dataclass(frozen=True)
class LpSolution:
    status: str
    objective: float
    x: np.ndarray
    activity: np.ndarray
    iterations: int = 0


@dataclass(frozen=True)
class MilpSolution:
    status: str
    objective: float
    x: np.ndarray
    nodes: int
    gap: float

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Bounded-variable simplex over ``A x = b, lo <= x <= up`` (minimization)."""

    def __init__(self, A: np.ndarray, b: np.ndarray, lo: np.ndarray, up: np.ndarray):
        m, n = A.shape
        self.m, self.n = m, n
        self.lo = lo.astype(float).copy()
        self.up = up.astype(float).copy()
        x = np.where(np.isfinite(self.lo), self.lo, np.where(np.isfinite(self.up), self.up, 0.0))
        resid = b - A @ x
        sign = np.where(resid >= 0, 1.0, -1.0)
        # artificial columns n..n+m-1 start basic
        self.T = np.hstack([A * sign[:, None], np.eye(m)])
        self.lo = np.concatenate([self.lo, np.zeros(m)])
        self.up = np.concatenate([self.up, np.full(m, np.inf)])
        self.x = np.concatenate([x, np.abs(resid)])
        self.basis = np.arange(n, n + m)
        self.is_basic = np.zeros(n + m, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0

    def _reduced(self, c: np.ndarray) -> np.ndarray:
        return c - c[self.basis] @ self.T

    def run(self, c: np.ndarray, max_iter: int = 50_000) -> str:
        d = self._reduced(c)
        streak = 0
        span = self.up - self.lo
        while True:
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration limit reached")
            at_lo = self.x <= self.lo + FEAS_TOL
            at_up = self.x >= self.up - FEAS_TOL
            movable = ~self.is_basic & (span > FEAS_TOL)
            # free nonbasic variables sit strictly inside and may move either way
            inc = movable & (d < -_COST_TOL) & ~at_up
            dec = movable & (d > _COST_TOL) & ~at_lo
            cand = inc | dec
            if not cand.any():
                return OPTIMAL
            if streak >= _DEGENERATE_STREAK:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if inc[j] else -1.0

            col = self.T[:, j] * direction
            xb = self.x[self.basis]
            lob = self.lo[self.basis]
            upb = self.up[self.basis]
            ratios = np.full(self.m, np.inf)
            pos = col > _PIVOT_TOL
            neg = col < -_PIVOT_TOL
            ratios[pos] = (xb[pos] - lob[pos]) / col[pos]
            ratios[neg] = (upb[neg] - xb[neg]) / -col[neg]
            ratios = np.maximum(ratios, 0.0)
            step_flip = span[j]
            ratio_min = ratios.min() if self.m else np.inf
            t = min(ratio_min, step_flip)
            if not math.isfinite(t):
                return UNBOUNDED
            self.iterations += 1
            streak = streak + 1 if t <= FEAS_TOL else 0

            if step_flip <= ratio_min:
                self.x[self.basis] = xb - step_flip * col
                self.x[j] = self.up[j] if direction > 0 else self.lo[j]
                continue

            ties = np.flatnonzero(ratios <= t + 1e-12)
            # smallest variable index among tied rows; prefer larger pivots otherwise
            if streak >= _DEGENERATE_STREAK:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(col[ties]))])
            leaving = int(self.basis[r])
            self.x[self.basis] = xb - t * col
            self.x[j] = self.x[j] + direction * t
            self.x[leaving] = self.lo[leaving] if col[r] > 0 else self.up[leaving]

            piv = self.T[r, j]
            self.T[r] /= piv
            colj = self.T[:, j].copy()
            colj[r] = 0.0
            self.T -= np.outer(colj, self.T[r])
            d = d - d[j] * self.T[r]
            self.basis[r] = j
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            if self.iterations % 100 == 0:
                d = self._reduced(c)


def solve_lp(problem: MilpProblem, lower: np.ndarray | None = None, upper: np.ndarray | None = None,
             *, _mats=None) -> LpSolution:
    """Solve the continuous relaxation of ``problem`` (optionally with overridden bounds)."""
    A, rhs, code = _mats if _mats is not None else problem.matrices()
    lo, up = problem.bounds()
    if lower is not None:
        lo = lower
    if upper is not None:
        up = upper
    m, n = A.shape
    # row slacks: a x + s = rhs, s >= 0 for <=, s <= 0 for >=, s = 0 for =
    s_lo = np.where(code == -1, 0.0, np.where(code == 1, -np.inf, 0.0))
    s_up = np.where(code == -1, np.inf, 0.0)
    full = np.hstack([A, np.eye(m)])
    tab = _Tableau(full, rhs, np.concatenate([lo, s_lo]), np.concatenate([up, s_up]))
    n_all = n + m
    obj = problem.objective
    sign = -1.0 if obj.sense == MAX else 1.0

    c1 = np.zeros(n_all + m)
    c1[n_all:] = 1.0
    tab.run(c1)
    infeas = float(tab.x[n_all:].sum())
    if infeas > FEAS_TOL * max(1.0, m):
        return LpSolution(INFEASIBLE, math.nan, lo.copy(), np.zeros(m), tab.iterations)
    tab.up[n_all:] = 0.0
    tab.x[n_all:] = np.minimum(tab.x[n_all:], 0.0)

    c2 = np.zeros(n_all + m)
    c2[:n] = sign * obj.expr.dense(n)
    status = tab.run(c2)
    _polish(tab, full, rhs, n_all)
    x = np.clip(tab.x[:n], lo, up)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, -sign * math.inf, x, A @ x, tab.iterations)
    value = obj.expr.value(x)
    return LpSolution(OPTIMAL, value, x, A @ x, tab.iterations)


def _polish(tab: _Tableau, full: np.ndarray, rhs: np.ndarray, n_all: int) -> None:
    """Recompute basic values from the original rows to shed pivoting drift."""
    basis = tab.basis
    real = basis < n_all
    if not real.all():
        # artificials still basic at zero: leave their rows untouched
        return
    B = full[:, basis]
    nonbasic = np.ones(n_all, dtype=bool)
    nonbasic[basis] = False
    r = rhs - full[:, nonbasic] @ tab.x[:n_all][nonbasic]
    try:
        tab.x[basis] = np.linalg.solve(B, r)
    except np.linalg.LinAlgError:
        pass


def solve_milp(problem: MilpProblem, *, node_limit: int = 1_000_000) -> MilpSolution:
    """Best-bound branch-and-bound over the binary variables of ``problem``."""
    mats = problem.matrices()
    lo0, up0 = problem.bounds()
    bins = np.array(problem.binaries(), dtype=int)
    sense = problem.objective.sense
    sign = -1.0 if sense == MAX else 1.0

    best_val = math.inf  # in minimization form
    best_x: np.ndarray | None = None
    counter = itertools.count()
    heap: list[tuple[float, int, np.ndarray, np.ndarray, LpSolution]] = []
    nodes = 0

    root = solve_lp(problem, lo0, up0, _mats=mats)
    nodes += 1
    if root.status == INFEASIBLE:
        return MilpSolution(INFEASIBLE, math.nan, lo0.copy(), nodes, math.inf)
    if root.status == UNBOUNDED:
        raise RuntimeError("LP relaxation unbounded; binaries and bounded continuous variables expected")
    heapq.heappush(heap, (sign * root.objective, next(counter), lo0.copy(), up0.copy(), root))

    while heap:
        bound, _, lo, up, lp = heapq.heappop(heap)
        if bound >= best_val - OBJ_TOL:
            continue
        frac = np.abs(lp.x[bins] - np.round(lp.x[bins])) if bins.size else np.zeros(0)
        if not bins.size or frac.max() <= INT_TOL:
            x = lp.x.copy()
            if bins.size and frac.max() > 0:
                # big-M rows amplify integrality slack, so re-derive the continuous part
                clo, cup = lo.copy(), up.copy()
                clo[bins] = cup[bins] = np.round(x[bins])
                exact = solve_lp(problem, clo, cup, _mats=mats)
                if exact.status == OPTIMAL:
                    x = exact.x.copy()
                x[bins] = np.round(x[bins])
            val = sign * problem.objective.expr.value(x)
            if val < best_val - OBJ_TOL or best_x is None:
                best_val, best_x = val, x
            continue
        # most fractional: distance to 0.5 smallest; argmax picks lowest index on ties
        k = int(bins[np.argmax(np.round(frac, 12))])
        for fix in (0.0, 1.0):
            clo, cup = lo.copy(), up.copy()
            clo[k] = cup[k] = fix
            if nodes >= node_limit:
                raise NodeLimitError(f"node limit {node_limit} reached")
            child = solve_lp(problem, clo, cup, _mats=mats)
            nodes += 1
            if child.status != OPTIMAL:
                continue
            cb = sign * child.objective
            if cb < best_val - OBJ_TOL:
                heapq.heappush(heap, (cb, next(counter), clo, cup, child))

    if best_x is None:
        return MilpSolution(INFEASIBLE, math.nan, lo0.copy(), nodes, math.inf)
    return MilpSolution(OPTIMAL, sign * best_val, best_x, nodes, 0.0)
