"""Eulerian states: velocity, density, and an energy measure with atoms.

The energy measure carries an absolutely continuous part, sampled as a
nonnegative density on the spatial grid, plus a finite list of point masses.
Atoms are what wave breaking produces: at a collision the entire local energy
sits at one point while u and rho vanish there.

The cumulative function uses the open-interval convention mu((-inf, x)): an
atom located exactly at x does not count.  That convention is what makes the
Lagrangian inverse map place plateau left endpoints correctly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConstraintViolation
from .grid import Grid, cumulative_trapezoid

__all__ = [
    "EnergyMeasure",
    "EulerianState",
    "DReport",
    "cumulative",
    "total_energy",
    "check_in_D",
]


@dataclass(frozen=True)
class EnergyMeasure:
    """Energy density samples on a spatial grid plus point masses.

    atoms is a tuple of (location, mass) pairs with strictly increasing
    locations and positive masses.
    """

    grid: Grid
    density: np.ndarray
    atoms: tuple = ()

    def __post_init__(self):
        d = np.array(self.density, dtype=np.float64, copy=True)
        if d.shape != (self.grid.n,):
            raise ConfigError(f"density has shape {d.shape}, expected ({self.grid.n},)")
        if not np.all(np.isfinite(d)):
            raise ConstraintViolation("density contains non-finite entries")
        if np.min(d) < 0.0:
            raise ConstraintViolation("energy density must be nonnegative")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)
        atoms = tuple((float(loc), float(mass)) for loc, mass in self.atoms)
        locs = [a[0] for a in atoms]
        if any(not np.isfinite(loc) or not np.isfinite(mass) for loc, mass in atoms):
            raise ConstraintViolation("atom entries must be finite")
        if any(mass <= 0.0 for _, mass in atoms):
            raise ConstraintViolation("atom masses must be positive")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise ConstraintViolation("atom locations must be strictly increasing")
        object.__setattr__(self, "atoms", atoms)

    def total(self) -> float:
        """Total mass: trapezoid of the density plus the sum of atom masses."""
        dens = float(np.trapezoid(self.density, dx=self.grid.dxi))
        return dens + sum(mass for _, mass in self.atoms)


def cumulative(mu: EnergyMeasure, x):
    """mu((-inf, x)): exact integral of the piecewise-linear density below x
    plus every atom strictly left of x.

    Accepts a scalar or an array of evaluation points.  The density is taken
    to vanish outside the sampled grid.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    g = mu.grid
    nodes = g.nodes
    dens = mu.density
    cum_nodes = cumulative_trapezoid(g, dens)  # exact for piecewise-linear density
    slopes = np.diff(dens) / g.dxi
    j = np.clip(np.searchsorted(nodes, xs, side="right") - 1, 0, g.n - 2)
    t = np.clip(xs - nodes[j], 0.0, g.dxi)
    out = cum_nodes[j] + dens[j] * t + 0.5 * slopes[j] * t * t
    out[xs <= nodes[0]] = 0.0
    out[xs >= nodes[-1]] = cum_nodes[-1]
    for loc, mass in mu.atoms:
        out[xs > loc] += mass
    return out[0] if np.isscalar(x) or np.ndim(x) == 0 else out


@dataclass(frozen=True)
class EulerianState:
    """The triple (u, rho, mu) sampled on a spatial grid.

    The measure's density lives on the same grid as u and rho.
    """

    grid: Grid
    u: np.ndarray
    rho: np.ndarray
    mu: EnergyMeasure

    def __post_init__(self):
        if self.mu.grid != self.grid:
            raise ConfigError("measure density must be sampled on the state's grid")
        for name in ("u", "rho"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            if arr.shape != (self.grid.n,):
                raise ConfigError(f"field {name!r} has shape {arr.shape}, expected ({self.grid.n},)")
            if not np.all(np.isfinite(arr)):
                raise ConstraintViolation(f"field {name!r} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def total_energy(self) -> float:
        return self.mu.total()


def total_energy(z: EulerianState) -> float:
    return z.mu.total()


@dataclass(frozen=True)
class DReport:
    """Residuals of the admissible-triple conditions.

    max_density_residual compares the density against u^2 + u_x^2 + rho^2
    with a central-difference u_x (one-sided at the boundary nodes).  At a
    velocity kink the central difference is meaningless, so the
    kink-tolerant variant takes, node by node, the best of the backward,
    forward, and central estimates; membership is judged on that one.
    """

    max_density_residual: float
    kink_tolerant_residual: float
    total_energy: float
    in_D: bool

    def in_DM(self, m_bound: float) -> bool:
        return self.in_D and self.total_energy <= m_bound


def _slope_estimates(u: np.ndarray, dx: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = len(u)
    fwd = np.empty(n)
    fwd[:-1] = np.diff(u) / dx
    fwd[-1] = fwd[-2]
    bwd = np.empty(n)
    bwd[1:] = np.diff(u) / dx
    bwd[0] = bwd[1]
    cen = 0.5 * (fwd + bwd)
    return bwd, cen, fwd

def check_in_D(z: EulerianState, tol: float | None = None) -> DReport:
    """Check that the absolutely continuous part of mu matches u^2+u_x^2+rho^2.

    Sign conditions on the density and atoms are enforced at construction;
    this adds the quantitative part.  Atoms never enter the residual.

    With ``tol`` given, membership is the uniform bound ``residual <= tol``.
    The default judges each node against 2 dxi (1 + the slope jumps into its
    neighbors): even the best one-sided difference misses a kink slope by
    O(dxi), so a uniform tolerance either rejects every sampled peakon or
    is too loose at the smooth nodes to reject corrupted data.
    """
    base = z.u * z.u + z.rho * z.rho
    bwd, cen, fwd = _slope_estimates(z.u, z.grid.dxi)
    res_cen = np.abs(z.mu.density - (base + cen * cen))
    res_all = np.minimum(
        res_cen,
        np.minimum(np.abs(z.mu.density - (base + bwd * bwd)),
                   np.abs(z.mu.density - (base + fwd * fwd))),
    )
    central = float(np.max(res_cen))
    tolerant = float(np.max(res_all))
    if tol is None:
        jump = np.abs(np.diff(cen))
        local = np.zeros_like(cen)
        local[:-1] += jump
        local[1:] += jump
        allow = 2.0 * z.grid.dxi * (1.0 + local)
        ok = bool(np.all(res_all <= allow))
    else:
        ok = tolerant <= tol
    return DReport(
        max_density_residual=central,
        kink_tolerant_residual=tolerant,
        total_energy=z.total_energy(),
        in_D=ok,
    )
