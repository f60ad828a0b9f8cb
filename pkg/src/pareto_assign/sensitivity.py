"""Capacity and green-incentive sensitivity runs."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .frontier import FrontierConfig, FrontierResult, ParetoPoint, run_frontier
from .model import Instance


@dataclass(frozen=True)
class SensitivityReport:
    kind: str
    base: FrontierResult
    variant: FrontierResult
    # grid_index -> (base point, variant point) for indices solved in both runs
    matched: tuple[tuple[int, ParetoPoint, ParetoPoint], ...]

    def deltas(self) -> list[tuple[int, float, float, float]]:
        """Per matched grid index: variant minus base for z1, z2, z3."""
        out = []
        for g, a, b in self.matched:
            va, vb = a.objectives, b.objectives
            out.append((g, vb.z1 - va.z1, vb.z2 - va.z2, vb.z3 - va.z3))
        return out

    def average_deltas(self) -> tuple[float, float, float]:
        d = self.deltas()
        if not d:
            return (0.0, 0.0, 0.0)
        return tuple(sum(row[k] for row in d) / len(d) for k in (1, 2, 3))  # type: ignore[return-value]

    def average_relative(self) -> tuple[float, float, float]:
        """Mean relative change per objective over matched points (0.0 where the base is 0)."""
        rel = [[], [], []]
        for _, a, b in self.matched:
            for k, (x, y) in enumerate(zip(a.objectives.as_tuple(), b.objectives.as_tuple())):
                rel[k].append((y - x) / abs(x) if x else 0.0)
        return tuple(sum(r) / len(r) if r else 0.0 for r in rel)  # type: ignore[return-value]

    def ideal_shift(self) -> tuple[tuple[float, float, float], tuple[float, float, float]] | None:
        if self.base.payoff is None or self.variant.payoff is None:
            return None
        return self.base.payoff.ideal, self.variant.payoff.ideal


def _match(a: FrontierResult, b: FrontierResult) -> tuple[tuple[int, ParetoPoint, ParetoPoint], ...]:
    right = dict(b.sweep)
    return tuple((g, p, right[g]) for g, p in a.sweep if g in right)


def sensitivity_capacity(inst: Instance, scale: float, cfg: FrontierConfig) -> SensitivityReport:
    if not scale > 0:
        raise ValueError("capacity scale must be positive")
    base = run_frontier(inst, cfg)
    variant = run_frontier(inst.with_capacity_scale(scale), cfg)
    return SensitivityReport("capacity", base, variant, _match(base, variant))


def sensitivity_green(inst: Instance, cfg: FrontierConfig) -> SensitivityReport:
    """Run the frontier without and with the green incentive (base = off)."""
    off = run_frontier(inst, replace(cfg, green_enabled=False))
    on = run_frontier(inst, replace(cfg, green_enabled=True))
    return SensitivityReport("green", off, on, _match(off, on))


def green_table(inst: Instance, report: SensitivityReport) -> list[dict]:
    """Rows in the with/without green layout, one per matched grid index."""
    rows = []
    for g, off, on in report.matched:
        a = on.assignment
        rows.append({
            "grid_index": g,
            "cost_off": off.objectives.z1,
            "quality_off": off.objectives.z2,
            "cost_on": on.objectives.z1,
            "quality_on": on.objectives.z2,
            "emission_on": on.objectives.z3,
            "incentive_on": inst.penalty_rate * a.t_green - inst.reward_rate * a.e_green,
        })
    return rows
