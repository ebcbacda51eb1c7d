"""Uniform node grids and the trapezoid quadrature helpers used everywhere.

All fields in this package are samples on a uniform grid and are interpreted
as the piecewise-linear interpolant through those samples.  The trapezoid rule
is then the exact integral of that interpolant, which keeps quadrature,
interpolation and serialization mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "Grid",
    "aligned_grid",
    "trapezoid_weights",
    "cumulative_trapezoid",
    "l2_norm",
    "sup_norm",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` nodes on ``[xi_min, xi_max]``.

    The same class describes Lagrangian (xi) and Eulerian (x) axes.
    """

    xi_min: float
    xi_max: float
    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"grid needs at least 3 nodes, got n={self.n}")
        if not (np.isfinite(self.xi_min) and np.isfinite(self.xi_max)):
            raise ConfigError("grid bounds must be finite")
        if not self.xi_max > self.xi_min:
            raise ConfigError(f"xi_max={self.xi_max} must exceed xi_min={self.xi_min}")
        nodes = np.linspace(self.xi_min, self.xi_max, self.n)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def dxi(self) -> float:
        return (self.xi_max - self.xi_min) / (self.n - 1)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Grid)
            and self.n == other.n
            and self.xi_min == other.xi_min
            and self.xi_max == other.xi_max
        )

    def __hash__(self):
        return hash((self.xi_min, self.xi_max, self.n))


def aligned_grid(xi_min: float, xi_max: float, n: int, through: float) -> Grid:
    """A uniform grid translated minimally so ``through`` falls on a node.

    Fields with an isolated kink (a peakon crest, say) resample at first
    order unless some node hits the kink exactly; sliding the whole grid by
    less than one spacing restores second-order behavior without changing
    the resolution.  ``through`` must lie inside the interval.
    """
    base = Grid(xi_min, xi_max, n)
    if not xi_min < through < xi_max:
        raise ConfigError(f"alignment point {through} is outside ({xi_min}, {xi_max})")
    k = int(round((through - xi_min) / base.dxi))
    k = min(max(k, 1), n - 2)
    offset = through - (xi_min + k * base.dxi)
    return Grid(xi_min + offset, xi_max + offset, n)


def trapezoid_weights(grid: Grid) -> np.ndarray:
    """Node weights of the trapezoid rule: dxi/2 at the ends, dxi inside."""
    w = np.full(grid.n, grid.dxi)
    w[0] = w[-1] = 0.5 * grid.dxi
    return w


def cumulative_trapezoid(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Running trapezoid integral from the left boundary; result[0] == 0."""
    out = np.empty(grid.n)
    out[0] = 0.0
    np.cumsum(0.5 * grid.dxi * (values[1:] + values[:-1]), out=out[1:])
    return out


def l2_norm(grid: Grid, values: np.ndarray) -> float:
    """Trapezoid approximation of the L2 norm over the grid interval."""
    return float(np.sqrt(np.trapezoid(values * values, dx=grid.dxi)))


def sup_norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if len(values) else 0.0
