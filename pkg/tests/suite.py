"""Shared instance suite and cached reference results for the test modules."""

from __future__ import annotations

from functools import lru_cache
from itertools import islice

import numpy as np

from pareto_assign.frontier import AUGMECON2, AUGMECON2VIKOR, FrontierConfig, run_frontier
from pareto_assign.generate import GeneratorError, generate_instance, small_spec
from pareto_assign.io import load_fixture
from pareto_assign.model import (
    Feature,
    Instance,
    Line,
    LineClass,
    Product,
    ProductClass,
)
from pareto_assign.oracle import brute_force_pareto, enumerate_assignments

SMALL_COUNT = 50
GRID = 10


def tiny1() -> Instance:
    return load_fixture("tiny1")


def paper_scale() -> Instance:
    return load_fixture("paper_scale")


def singleton() -> Instance:
    """One product, one feature, one dedicated line."""
    P = ProductClass.PERISHABLE
    shape = (1, 1, 1)
    return Instance((Product("P1", P),), (Feature("F1", P),), (Line("L1", LineClass.PERISHABLE, 2.0, frozenset({0})),),
                    [[1]], np.full(shape, 4.0), np.full(shape, 0.6), np.full(shape, 3.0), np.ones(shape),
                    3.0, 2.0, 1.0)


@lru_cache(maxsize=None)
def small_instances() -> tuple[tuple[int, Instance], ...]:
    """The first SMALL_COUNT seeds whose small instance has at least two feasible assignments."""
    out = []
    seed = 0
    while len(out) < SMALL_COUNT:
        seed += 1
        try:
            inst = generate_instance(small_spec(seed))
        except GeneratorError:
            continue
        if len(list(islice(enumerate_assignments(inst), 2))) == 2:
            out.append((seed, inst))
    return tuple(out)


@lru_cache(maxsize=None)
def suite() -> tuple[tuple[str, Instance], ...]:
    named = [(f"small-{seed}", inst) for seed, inst in small_instances()]
    return tuple(named + [("tiny1", tiny1()), ("paper_scale", paper_scale())])


@lru_cache(maxsize=None)
def oracle(name: str, green: bool = True):
    return brute_force_pareto(dict(suite())[name], green)


@lru_cache(maxsize=None)
def front(name: str, method: str, grid: int = GRID, bypass: bool = True):
    cfg = FrontierConfig(method=method, grid_count=grid, bypass=bypass, weights=(1 / 3, 1 / 3, 1 / 3))
    return run_frontier(dict(suite())[name], cfg)


METHODS = (AUGMECON2, AUGMECON2VIKOR)
