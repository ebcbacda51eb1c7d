"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from twoch.grid import Grid
from twoch.lagrangian import LagrangianState, Relabeling


@pytest.fixture
def desk_grid():
    """Mid-resolution grid most module tests run on."""
    return Grid(-25.0, 25.0, 1000)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def unit_shift(grid: Grid, a: int, b: int, c: int, d: int, cells: int) -> Relabeling:
    """Relabeling that shifts the index block [b+1, c) by whole cells.

    Ramps over [a, b] and [c, d] absorb the shift; outside [a, d] it is the
    identity.  Because the core moves by an integer number of cells, relabel()
    acts on sampled states by pure reindexing there, with no interpolation.
    """
    i = np.arange(grid.n, dtype=float)
    F = i.copy()
    F[a:b + 1] = a + (i[a:b + 1] - a) * (b - a + cells) / (b - a)
    F[b + 1:c] = i[b + 1:c] + cells
    F[c:d + 1] = c + cells + (i[c:d + 1] - c) * (d - c - cells) / (d - c)
    return Relabeling(grid, grid.xi_min + F * grid.dxi)


def assert_states_close(Xa: LagrangianState, Xb: LagrangianState, tol: float,
                        fields=("y", "U", "H", "r", "yxi", "Uxi", "hxi")):
    worst = {f: float(np.max(np.abs(getattr(Xa, f) - getattr(Xb, f))))
             for f in fields}
    bad = {f: v for f, v in worst.items() if v > tol}
    assert not bad, f"fields beyond {tol:g}: {bad}"
