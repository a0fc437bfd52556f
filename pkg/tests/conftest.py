import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import settings

from cecap import Channel, DiscreteCircularDistribution, build_polar_grid

settings.register_profile("suite", max_examples=50, deadline=None)
settings.load_profile("suite")


@lru_cache(maxsize=64)
def _grid_cached(lam: float, radius: float):
    return build_polar_grid(Channel(lam=lam, radius=radius))


@pytest.fixture(scope="session")
def grid_for():
    """Channel -> quadrature grid, memoized across the session."""

    def build(ch: Channel):
        return _grid_cached(ch.lam, ch.radius)

    return build


@lru_cache(maxsize=16)
def _solve_cached(lam: float, radius: float):
    from cecap import SolverConfig, solve_capacity

    return solve_capacity(Channel(lam=lam, radius=radius), SolverConfig())


@pytest.fixture(scope="session")
def solve_for():
    """(lam, radius) -> verified capacity result, memoized across the session."""
    return _solve_cached


def random_canonical(rng: np.random.Generator) -> DiscreteCircularDistribution:
    """Random distribution closed under theta -> -theta and pi - theta.

    Draws a mix of axis pairs and interior quadruples with Dirichlet orbit
    weights; interior angles keep 0.05 clearance from the axes and from each
    other so the atom-gap validation never trips.
    """
    while True:
        axis0 = bool(rng.integers(2))
        axis90 = bool(rng.integers(2))
        n_gen = int(rng.integers(0, 3))
        if axis0 or axis90 or n_gen:
            break
    alphas = []
    while len(alphas) < n_gen:
        a = float(rng.uniform(0.05, 0.5 * math.pi - 0.05))
        if all(abs(a - b) > 0.02 for b in alphas):
            alphas.append(a)
    n_orbits = int(axis0) + int(axis90) + n_gen
    weights = rng.dirichlet(np.ones(n_orbits))
    atoms = []
    k = 0
    if axis0:
        atoms += [(0.0, weights[k] / 2.0), (math.pi, weights[k] / 2.0)]
        k += 1
    if axis90:
        atoms += [(0.5 * math.pi, weights[k] / 2.0), (1.5 * math.pi, weights[k] / 2.0)]
        k += 1
    for a in alphas:
        p = weights[k] / 4.0
        k += 1
        atoms += [
            (a, p),
            (math.pi - a, p),
            (math.pi + a, p),
            (2.0 * math.pi - a, p),
        ]
    return DiscreteCircularDistribution(atoms=tuple(atoms))
