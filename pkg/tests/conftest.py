"""Shared fixtures.  The expensive chain builds are memoized per session
so acceptance criteria can share grids without re-integrating."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from translator_forge.catalog import catalog
from translator_forge.gaussmap import compatibility_F
from translator_forge.grid import ComplexGrid, grid_from_spacing
from translator_forge.immersion import integrate_immersion
from translator_forge.nullcurve import build_null_curve


@dataclass
class Chain:
    """One full construction: pair through integrated patch."""

    spec: object
    grid: ComplexGrid
    pair: object
    F: object
    cp: object
    ncf: object
    patch: object
    elapsed: float


def _build_chain(name: str, h: float, theta: float | None,
                 domain: tuple | None) -> Chain:
    params = {} if theta is None else {"theta": theta}
    spec = catalog(name, **params)
    dom = domain if domain is not None else spec.default_domain
    grid = grid_from_spacing(*dom, h)
    t0 = time.perf_counter()
    pair = spec.pair_generator(grid)
    F, cp = compatibility_F(pair)
    ncf = build_null_curve(pair, F, reduce_to_r3=(spec.dim == 3))
    patch = integrate_immersion(ncf)
    elapsed = time.perf_counter() - t0
    return Chain(spec, grid, pair, F, cp, ncf, patch, elapsed)


@pytest.fixture(scope="session")
def chain():
    """Memoized chain builder: chain(name, h, theta=None, domain=None)."""
    cache: dict = {}

    def get(name: str, h: float, theta: float | None = None,
            domain: tuple | None = None) -> Chain:
        key = (name, h, theta, domain)
        if key not in cache:
            cache[key] = _build_chain(name, h, theta, domain)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture
def small_grid():
    return grid_from_spacing(-1.0, 1.0, -1.0, 1.0, 0.1)
