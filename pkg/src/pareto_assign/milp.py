"""Mixed-binary linear program in a solver-facing normal form.

A :class:`MilpProblem` is an immutable bundle of variables, linear rows and
one or more named objective rows.  Problems are assembled with
:class:`MilpBuilder` and can be extended (extra variables, rows, a different
active objective) without mutating the original, which lets the frontier
code derive many sub-problems from one base encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

BINARY = "binary"
CONTINUOUS = "continuous"

LE = "<="
EQ = "="
GE = ">="

MIN = "min"
MAX = "max"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: float
    upper: float


@dataclass(frozen=True)
class LinearExpr:
    """Sparse linear expression ``sum(coef * x[idx]) + constant``."""

    terms: Mapping[int, float]
    constant: float = 0.0

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for idx, coef in self.terms.items():
            out[idx] += coef
        return out

    def value(self, x: np.ndarray) -> float:
        return float(sum(coef * x[idx] for idx, coef in self.terms.items()) + self.constant)

    def scaled(self, factor: float) -> "LinearExpr":
        return LinearExpr({k: v * factor for k, v in self.terms.items()}, self.constant * factor)

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return LinearExpr(terms, self.constant + other.constant)

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        return self + other.scaled(-1.0)


@dataclass(frozen=True)
class Constraint:
    name: str
    expr: LinearExpr
    sense: str
    rhs: float


@dataclass(frozen=True)
class Objective:
    expr: LinearExpr
    sense: str


@dataclass(frozen=True)
class MilpProblem:
    """Immutable mixed-binary linear program.

    ``objectives`` holds every named objective row; ``active`` names the one a
    solver optimizes.  ``roles`` maps variable names to domain meaning, e.g.
    ``("x", i, j, l)`` for assignment binaries or ``("t_green",)``.
    """

    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objectives: Mapping[str, Objective]
    active: str
    roles: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for v in self.variables:
            if v.kind == BINARY and (v.lower < 0 or v.upper > 1):
                raise ValueError(f"binary variable {v.name} must lie in [0, 1]")
            if not (math.isfinite(v.lower) and math.isfinite(v.upper)):
                raise ValueError(f"variable {v.name} needs finite bounds")
            if v.lower > v.upper:
                raise ValueError(f"variable {v.name} has empty bounds")
        if self.active not in self.objectives:
            raise ValueError(f"unknown active objective {self.active!r}")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def objective(self) -> Objective:
        return self.objectives[self.active]

    def index(self, name: str) -> int:
        return self._name_index()[name]

    def _name_index(self) -> dict[str, int]:
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {v.name: k for k, v in enumerate(self.variables)}
            object.__setattr__(self, "_index_cache", cache)
        return cache

    def binaries(self) -> list[int]:
        return [k for k, v in enumerate(self.variables) if v.kind == BINARY]

    def count(self, kind: str) -> int:
        return sum(1 for v in self.variables if v.kind == kind)

    def with_objective(self, name: str) -> "MilpProblem":
        return MilpProblem(self.variables, self.constraints, self.objectives, name, self.roles)

    def builder(self) -> "MilpBuilder":
        """Start a builder pre-loaded with this problem's content."""
        b = MilpBuilder()
        b.variables = list(self.variables)
        b.constraints = list(self.constraints)
        b.objectives = dict(self.objectives)
        b.roles = dict(self.roles)
        b.active = self.active
        b._names = dict(self._name_index())
        return b

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense ``(A, rhs, sense_code)``; sense codes are -1 (<=), 0 (=), +1 (>=)."""
        n = self.n_vars
        A = np.zeros((len(self.constraints), n))
        rhs = np.zeros(len(self.constraints))
        code = np.zeros(len(self.constraints), dtype=int)
        lookup = {LE: -1, EQ: 0, GE: 1}
        for r, c in enumerate(self.constraints):
            for idx, coef in c.expr.terms.items():
                A[r, idx] += coef
            rhs[r] = c.rhs - c.expr.constant
            code[r] = lookup[c.sense]
        return A, rhs, code

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([v.lower for v in self.variables], dtype=float)
        up = np.array([v.upper for v in self.variables], dtype=float)
        return lo, up

    def violations(self, x: np.ndarray, tol: float = 1e-7) -> list[str]:
        """Names of rows and bounds violated by ``x`` beyond ``tol``."""
        bad = []
        for k, v in enumerate(self.variables):
            if x[k] < v.lower - tol or x[k] > v.upper + tol:
                bad.append(f"bound:{v.name}")
        for c in self.constraints:
            act = c.expr.value(x)
            if (c.sense == LE and act > c.rhs + tol) or (c.sense == GE and act < c.rhs - tol) or (
                c.sense == EQ and abs(act - c.rhs) > tol
            ):
                bad.append(c.name)
        return bad


class MilpBuilder:
    """Mutable assembly helper; :meth:`build` freezes into a :class:`MilpProblem`."""

    def __init__(self) -> None:
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objectives: dict[str, Objective] = {}
        self.roles: dict[str, tuple] = {}
        self.active: str | None = None
        self._names: dict[str, int] = {}

    def add_var(self, name: str, kind: str = CONTINUOUS, lower: float = 0.0, upper: float = 1.0,
                role: tuple | None = None) -> int:
        if name in self._names:
            raise ValueError(f"duplicate variable {name!r}")
        if kind == BINARY:
            lower, upper = 0.0, 1.0
        self.variables.append(Variable(name, kind, float(lower), float(upper)))
        self._names[name] = len(self.variables) - 1
        if role is not None:
            self.roles[name] = role
        return len(self.variables) - 1

    def index(self, name: str) -> int:
        return self._names[name]

    def add_row(self, name: str, terms: Mapping[int, float] | Iterable[tuple[int, float]],
                sense: str, rhs: float) -> None:
        if not isinstance(terms, Mapping):
            acc: dict[int, float] = {}
            for k, v in terms:
                acc[k] = acc.get(k, 0.0) + v
            terms = acc
        self.constraints.append(Constraint(name, LinearExpr(dict(terms)), sense, float(rhs)))

    def add_expr_row(self, name: str, expr: LinearExpr, sense: str, rhs: float) -> None:
        self.constraints.append(Constraint(name, expr, sense, float(rhs)))

    def set_objective(self, name: str, expr: LinearExpr, sense: str, activate: bool = False) -> None:
        self.objectives[name] = Objective(expr, sense)
        if activate or self.active is None:
            self.active = name

    def build(self) -> MilpProblem:
        if self.active is None:
            self.set_objective("zero", LinearExpr({}), MIN)
        return MilpProblem(tuple(self.variables), tuple(self.constraints), dict(self.objectives),
                           self.active, dict(self.roles))


def expr_bound(expr: LinearExpr, problem_vars: Iterable[Variable]) -> float:
    """Upper bound on ``|expr|`` over the variable box."""
    vs = list(problem_vars)
    total = abs(expr.constant)
    for idx, coef in expr.terms.items():
        v = vs[idx]
        total += abs(coef) * max(abs(v.lower), abs(v.upper))
    return total


def _fmt(x: float) -> str:
    return repr(float(x)) if x != int(x) else str(int(x))


def _expr_text(expr: LinearExpr, variables: tuple[Variable, ...]) -> str:
    parts = []
    for idx in sorted(expr.terms):
        coef = expr.terms[idx]
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        term = variables[idx].name if mag == 1 else f"{_fmt(mag)} {variables[idx].name}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_text(problem: MilpProblem) -> str:
    """Render in CPLEX-LP-like text for cross-checking with external solvers."""
    obj = problem.objective
    lines = ["\\ problem dump, active objective: " + problem.active,
             "Maximize" if obj.sense == MAX else "Minimize",
             f" obj: {_expr_text(obj.expr, problem.variables)}"]
    if obj.expr.constant:
        lines.append(f"\\ objective constant: {_fmt(obj.expr.constant)}")
    lines.append("Subject To")
    for c in problem.constraints:
        rhs = c.rhs - c.expr.constant
        lines.append(f" {c.name}: {_expr_text(c.expr, problem.variables)} {c.sense} {_fmt(rhs)}")
    lines.append("Bounds")
    for v in problem.variables:
        if v.kind != BINARY:
            lines.append(f" {_fmt(v.lower)} <= {v.name} <= {_fmt(v.upper)}")
    bins = [v.name for v in problem.variables if v.kind == BINARY]
    if bins:
        lines.append("Binaries")
        lines.extend(f" {b}" for b in bins)
    lines.append("End")
    return "\n".join(lines) + "\n"
