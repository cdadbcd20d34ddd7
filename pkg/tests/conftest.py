"""Shared fixtures: parameter sets, grids, and memoized ground states."""

import pytest

from inlslab import build_grid, make_params, solve_ground_state


@pytest.fixture(scope="session")
def params_default():
    return make_params(2.0, 0.5)


@pytest.fixture(scope="session")
def grid_coarse():
    return build_grid(16.0, 256)


@pytest.fixture(scope="session")
def grid_medium():
    return build_grid(20.0, 1024)


@pytest.fixture(scope="session")
def ground_state_cache():
    """Memoized solver front-end: get(p, b, r_max, n, tol) -> (params, grid, gs).

    Ground states are the expensive shared ingredient across test modules,
    so everything funnels through one per-session cache.
    """
    cache = {}

    def get(p=2.0, b=0.5, r_max=20.0, n=1024, tol=1e-10):
        key = (p, b, r_max, n, tol)
        if key not in cache:
            params = make_params(p, b)
            grid = build_grid(r_max, n)
            cache[key] = (params, grid, solve_ground_state(params, grid, tol=tol))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def gs_default(ground_state_cache):
    """(params, grid, gs) for (p, b) = (2, 0.5) on a 20.0/1024 grid."""
    return ground_state_cache()
