"""Seeded random instance generator."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import (
    PER_ABILITY,
    Assignment,
    Feature,
    Instance,
    Line,
    LineClass,
    Product,
    ProductClass,
    check_feasible,
)


class GeneratorError(ValueError):
    """The generator spec cannot produce a coverable instance."""


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int = 1
    perishable_products: int = 3
    non_perishable_products: int = 3
    perishable_features: int = 3
    non_perishable_features: int = 3
    perishable_lines: int = 2
    non_perishable_lines: int = 2
    hybrid_lines: int = 1
    require_prob: float = 0.6
    support_prob: float = 0.8
    incompatible_prob: float = 0.15
    cost_range: tuple[float, float] = (800.0, 2000.0)
    quality_range: tuple[float, float] = (0.5, 1.0)
    emission_range: tuple[float, float] = (8.0, 30.0)
    resource_range: tuple[float, float] = (1.0, 5.0)
    # line capacity as a fraction of the resource its candidate triples could demand
    capacity_fraction: tuple[float, float] = (0.6, 1.0)
    ag_fraction: float = 0.9
    alpha: float = 20.0
    beta: float = 10.0
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    ag_samples: int = 100

    def __post_init__(self) -> None:
        if self.perishable_products + self.non_perishable_products < 1:
            raise GeneratorError("need at least one product")
        if self.perishable_features + self.non_perishable_features < 1:
            raise GeneratorError("need at least one feature")
        for name in ("cost_range", "quality_range", "emission_range", "resource_range", "capacity_fraction"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise GeneratorError(f"{name} is empty")


def _uniform(rng: np.random.Generator, bounds: tuple[float, float], mix: float, decimals: int) -> float:
    lo, hi = bounds
    return round(lo + (hi - lo) * mix, decimals)


def generate_instance(spec: GeneratorSpec) -> Instance:
    """Draw a deterministic instance from ``spec``.

    Every required (product, feature) pair is guaranteed at least one capable
    line.  Cost and quality rise together and emission falls with them, so the
    three objectives genuinely conflict.
    """
    rng = np.random.default_rng(spec.seed)
    P, N = ProductClass.PERISHABLE, ProductClass.NON_PERISHABLE
    products = [Product(f"P{k + 1}", P) for k in range(spec.perishable_products)]
    products += [Product(f"P{k + 1 + spec.perishable_products}", N) for k in range(spec.non_perishable_products)]
    features = [Feature(f"F{k + 1}", P) for k in range(spec.perishable_features)]
    features += [Feature(f"F{k + 1 + spec.perishable_features}", N) for k in range(spec.non_perishable_features)]
    line_classes = ([LineClass.PERISHABLE] * spec.perishable_lines + [LineClass.NON_PERISHABLE] * spec.non_perishable_lines
                    + [LineClass.HYBRID] * spec.hybrid_lines)
    n_i, n_j, n_l = len(products), len(features), len(line_classes)

    requires = np.zeros((n_i, n_j), dtype=int)
    for i, p in enumerate(products):
        same = [j for j, f in enumerate(features) if f.cls == p.cls]
        if not same:
            raise GeneratorError(f"product {p.name} has no feature of its class")
        mask = rng.random(len(same)) < spec.require_prob
        if not mask.any():
            mask[rng.integers(len(same))] = True
        for j, m in zip(same, mask):
            requires[i, j] = int(m)

    supports: list[set[int]] = []
    for cls in line_classes:
        eligible = [j for j, f in enumerate(features) if cls.serves(f.cls)]
        chosen = {j for j in eligible if rng.random() < spec.support_prob}
        if not chosen and eligible:
            chosen.add(eligible[int(rng.integers(len(eligible)))])
        supports.append(chosen)
    for j, f in enumerate(features):
        if not requires[:, j].any() or any(j in s for s in supports):
            continue
        able = [l for l, cls in enumerate(line_classes) if cls.serves(f.cls)]
        if not able:
            raise GeneratorError(f"feature {f.name} is required but no line can serve {f.cls.value} features")
        supports[able[int(rng.integers(len(able)))]].add(j)

    incompatible = []
    for l, cls in enumerate(line_classes):
        pairs = set()
        for a, b in combinations(sorted(supports[l]), 2):
            if cls is not LineClass.HYBRID and rng.random() < spec.incompatible_prob:
                pairs.add(frozenset((a, b)))
        incompatible.append(frozenset(pairs))

    shape = (n_i, n_j, n_l)
    cost = np.zeros(shape)
    quality = np.zeros(shape)
    emission = np.zeros(shape)
    resource = np.zeros(shape)
    for i in range(n_i):
        for j in range(n_j):
            for l in range(n_l):
                u, v1, v2, v3, v4 = rng.random(5)
                if not (requires[i, j] and j in supports[l] and line_classes[l].serves(products[i].cls)):
                    continue
                cost[i, j, l] = _uniform(rng, spec.cost_range, 0.6 * u + 0.4 * v1, 2)
                quality[i, j, l] = _uniform(rng, spec.quality_range, 0.6 * u + 0.4 * v2, 3)
                emission[i, j, l] = _uniform(rng, spec.emission_range, 0.6 * (1 - u) + 0.4 * v3, 2)
                resource[i, j, l] = _uniform(rng, spec.resource_range, v4, 2)

    caps = []
    for l in range(n_l):
        load = sum(resource[i, j, l] for i in range(n_i) for j in range(n_j))
        frac = _uniform(rng, spec.capacity_fraction, rng.random(), 6)
        caps.append(round(max(load * frac, float(resource[:, :, l].max(initial=0.0)), 1.0), 2))
    lines = tuple(Line(f"L{l + 1}", line_classes[l], caps[l], frozenset(supports[l]), incompatible[l])
                  for l in range(n_l))

    draft = Instance(tuple(products), tuple(features), lines, requires, cost, quality, emission, resource,
                     0.0, spec.alpha, spec.beta, spec.weights)
    ag = round(spec.ag_fraction * _mean_sampled_emission(draft, rng, spec.ag_samples), 2)
    return draft.replace(avg_emission=ag)


def _mean_sampled_emission(inst: Instance, rng: np.random.Generator, samples: int) -> float:
    pairs = inst.required_pairs()
    choices = [inst.capable_lines(i, j) for i, j in pairs]
    feasible, fallback = [], []
    for _ in range(samples * 50):
        trip = [(i, j, c[int(rng.integers(len(c)))]) for (i, j), c in zip(pairs, choices)]
        a = Assignment.from_triples(inst, trip)
        if len(fallback) < samples:
            fallback.append(a.total_emission)
        if check_feasible(inst, a, hybrid_limit=PER_ABILITY).feasible:
            feasible.append(a.total_emission)
            if len(feasible) >= samples:
                break
    pool = feasible or fallback
    return float(np.mean(pool)) if pool else 0.0


PAPER_SCALE_SEED = 3


def small_spec(seed: int) -> GeneratorSpec:
    """Spec for an instance with at most three products, features and lines, sized by the seed."""
    rng = np.random.default_rng([seed, 7919])
    n_products = int(rng.integers(1, 4))
    per_products = int(rng.integers(0, n_products + 1))
    classes_needed = (per_products > 0) + (n_products - per_products > 0)
    n_features = int(rng.integers(max(1, classes_needed), 4))
    if per_products == 0:
        per_features = 0
    elif per_products == n_products:
        per_features = n_features
    else:
        per_features = int(rng.integers(1, n_features))
    n_lines = int(rng.integers(2, 4))
    hybrid = int(rng.integers(0, n_lines + 1))
    per_lines = int(rng.integers(0, n_lines - hybrid + 1))
    non_lines = n_lines - hybrid - per_lines
    uncovered = ((per_products > 0 and per_lines == 0) or (per_products < n_products and non_lines == 0))
    if hybrid == 0 and uncovered:
        hybrid = 1
        if non_lines:
            non_lines -= 1
        else:
            per_lines -= 1
    return GeneratorSpec(
        seed=seed,
        perishable_products=per_products,
        non_perishable_products=n_products - per_products,
        perishable_features=per_features,
        non_perishable_features=n_features - per_features,
        perishable_lines=per_lines,
        non_perishable_lines=non_lines,
        hybrid_lines=hybrid,
        cost_range=(5.0, 20.0),
        quality_range=(0.5, 1.0),
        emission_range=(1.0, 10.0),
        resource_range=(1.0, 3.0),
        capacity_fraction=(0.7, 1.2),
        alpha=2.0,
        beta=1.0,
    )
