"""Reference data and brute-force implementations used to pin down the fast paths.

Everything here favors being obviously correct over being fast: direct
double-sum quadrature for the kernels, per-node bisection for the inverse
map, closed-form peakon profiles.  Tests compare the production code against
these.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .eulerian import EnergyMeasure, EulerianState, _slope_estimates
from .grid import Grid, cumulative_trapezoid, trapezoid_weights
from .lagrangian import LagrangianState

__all__ = [
    "single_peakon",
    "peakon_antipeakon",
    "collision_state",
    "brute_force_kernels",
    "peakon_lagrangian",
    "bisection_L",
    "random_admissible_state",
    "random_eulerian_state",
]


def single_peakon(c: float, x0: float, grid: Grid, mu_model: str = "discrete") -> EulerianState:
    """Traveling-wave profile u = c exp(-|x - x0|) with its energy density.

    mu_model picks how the u_x^2 part of the density is sampled:

    * "discrete": central differences of the sampled u (one-sided at the
      ends), the same stencil the membership check uses, so the density
      residual is exactly zero.
    * "analytic": the closed form c^2 exp(-2|x - x0|), which integrates to
      the exact energy up to O(dxi^2) but disagrees with any difference
      stencil at the crest node.
    """
    if c == 0.0:
        raise ConfigError("peakon speed must be nonzero")
    x = grid.nodes
    u = c * np.exp(-np.abs(x - x0))
    if mu_model == "discrete":
        _, cen, _ = _slope_estimates(u, grid.dxi)
        ux2 = cen * cen
    elif mu_model == "analytic":
        ux2 = c * c * np.exp(-2.0 * np.abs(x - x0))
    else:
        raise ConfigError(f"unknown mu_model {mu_model!r}")
    mu = EnergyMeasure(grid, u * u + ux2)
    return EulerianState(grid=grid, u=u, rho=np.zeros(grid.n), mu=mu)


def peakon_antipeakon(c: float, a: float, grid: Grid) -> EulerianState:
    """Antisymmetric superposition u = c e^{-|x+a|} - c e^{-|x-a|}.

    For separation 2a >> 1 this is an exponentially good approximation of
    two-peakon initial data headed for a collision at the origin.  The
    energy density is exact for the superposed profile: 2u^2 outside the
    interval [-a, a] (where u_x = +-u) and
    2 c^2 e^{-2a} (e^{2x} + e^{-2x}) inside.
    """
    if c == 0.0 or a <= 0.0:
        raise ConfigError("need nonzero speed and positive half-separation")
    x = grid.nodes
    u = c * (np.exp(-np.abs(x + a)) - np.exp(-np.abs(x - a)))
    inside = 2.0 * c * c * np.exp(-2.0 * a) * (np.exp(2.0 * x) + np.exp(-2.0 * x))
    dens = np.where(np.abs(x) < a, inside, 2.0 * u * u)
    mu = EnergyMeasure(grid, dens)
    return EulerianState(grid=grid, u=u, rho=np.zeros(grid.n), mu=mu)


def collision_state(energy: float, grid: Grid) -> EulerianState:
    """All of the energy in one atom at the origin, u = rho = 0.

    This is the Eulerian description at the instant of a peakon-antipeakon
    collision.  energy = 0 degenerates to the ground state.
    """
    if energy < 0.0:
        raise ConfigError("atom mass cannot be negative")
    atoms = ((0.0, float(energy)),) if energy > 0.0 else ()
    z = np.zeros(grid.n)
    return EulerianState(grid=grid, u=z, rho=z, mu=EnergyMeasure(grid, z, atoms))


def brute_force_kernels(X: LagrangianState):
    """O(N^2) trapezoid quadrature of the two convolution kernels.

    P_i = 1/4 sum_j exp(-|y_i - y_j|) (U_j^2 yxi_j + hxi_j) w_j and
    Q_i the same with a -sign(i - j) factor: the split is by node index,
    which matches the position order wherever y is strictly increasing and
    keeps the force sweeping across a collapsed plateau.  Returns (P, Q).
    """
    w = trapezoid_weights(X.grid)
    sr = X.U * X.U * X.yxi + X.hxi
    s = sr * w
    dy = X.y[:, None] - X.y[None, :]
    ker = np.exp(-np.abs(dy))
    lab = np.arange(X.grid.n)
    P = 0.25 * (ker @ s)
    Q = -0.25 * ((np.sign(lab[:, None] - lab[None, :]) * ker) @ s)
    # endpoint limits of the two one-sided sums behind Q at nodes that hold
    # the mean of a jump in the derivative fields (both sided extrapolations
    # deviate from the stored value oppositely and near-equally); each limit
    # comes from that side's own two neighbors
    y = X.y
    n = X.grid.n
    for i in range(2, n - 2):
        if not (y[i - 2] < y[i - 1] < y[i] < y[i + 1] < y[i + 2]):
            continue
        hat_l = 2.0 * math.exp(y[i - 1] - y[i]) * sr[i - 1] \
            - math.exp(y[i - 2] - y[i]) * sr[i - 2]
        hat_r = 2.0 * math.exp(y[i] - y[i + 1]) * sr[i + 1] \
            - math.exp(y[i] - y[i + 2]) * sr[i + 2]
        dl = sr[i] - hat_l
        dr = sr[i] - hat_r
        if dl * dr < 0.0 and abs(dl + dr) < 0.5 * (abs(dl) + abs(dr)):
            Q[i] -= 0.125 * X.grid.dxi * (hat_l - hat_r)
    return P, Q


def peakon_lagrangian(c: float, x0: float, grid: Grid) -> LagrangianState:
    """Exact Lagrangian data for the traveling peakon, sampled at the nodes.

    y solves xi = y + F(y) by bisection, with F the closed-form cumulative
    energy c^2 e^{2(y - x0)} below the crest and 2c^2 - c^2 e^{-2(y - x0)}
    above it; every other field is the closed form evaluated at y, so the
    data carries no sampling error at all.  The crest sits at
    xi = x0 + c^2, and a node landing exactly there (aligned grids place
    one) stores the mean of the two one-sided U_xi limits, zero.  That is
    the value the kernel quadrature integrates to second order, but it
    leaves the compatibility identity short by yxi^2 c^2 at that single
    node, so admissibility gates need an explicit tolerance above
    c^2 / (1 + 2 c^2)^2 when the grid is aligned.
    """
    if c == 0.0:
        raise ConfigError("peakon speed must be nonzero")
    cc = c * c
    xi = grid.nodes
    lo = xi - 2.0 * cc - 1.0
    hi = xi + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = np.where(mid < x0, cc * np.exp(2.0 * (mid - x0)),
                     2.0 * cc - cc * np.exp(-2.0 * (mid - x0)))
        high = mid + f > xi
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    y = 0.5 * (lo + hi)

    d = y - x0
    U = c * np.exp(-np.abs(d))
    dens = 2.0 * cc * np.exp(-2.0 * np.abs(d))
    yxi = 1.0 / (1.0 + dens)
    hxi = 1.0 - yxi
    H = xi - y
    Uxi = -np.sign(d) * c * np.exp(-np.abs(d)) * yxi
    crest = np.abs(d) <= 1e-9 * (1.0 + abs(x0) + cc)
    Uxi[crest] = 0.0
    return LagrangianState(grid=grid, y=y, U=U, H=H, r=np.zeros(grid.n),
                           yxi=yxi, Uxi=Uxi, hxi=hxi)


def bisection_L(z: EulerianState, grid: Grid, iterations: int = 80) -> LagrangianState:
    """Inverse map via per-node bisection on x + mu((-inf, x)) = xi.

    Independent of the production inversion: no cell logic, no closed-form
    roots, just bracketing.  Only valid for atom-free measures, where the
    map is continuous and strictly increasing.
    """
    from .eulerian import cumulative

    if z.mu.atoms:
        raise ConfigError("bisection inversion cannot handle atoms")
    xi = grid.nodes
    total = z.mu.total()
    lo = xi - total - 1.0
    hi = xi + 0.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        high = mid + cumulative(z.mu, mid) > xi
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    y = 0.5 * (lo + hi)

    xn = z.grid.nodes
    dens_at = np.interp(y, xn, z.mu.density)
    yxi = 1.0 / (1.0 + dens_at)
    U = np.interp(y, xn, z.u)
    rho_at = np.interp(y, xn, z.rho)
    r = rho_at * yxi
    H = xi - y
    hxi = 1.0 - yxi
    rad = np.maximum(dens_at - U * U - rho_at * rho_at, 0.0)
    uslope = np.diff(z.u) / z.grid.dxi
    j = np.clip(np.searchsorted(xn, y, side="right") - 1, 0, z.grid.n - 2)
    Uxi = np.sign(uslope[j]) * yxi * np.sqrt(rad)
    return LagrangianState(grid=grid, y=y, U=U, H=H, r=r, yxi=yxi, Uxi=Uxi, hxi=hxi)


def _bump_field(grid: Grid, rng: np.random.Generator, n_bumps: int) -> np.ndarray:
    span = grid.xi_max - grid.xi_min
    xs = grid.nodes
    out = np.zeros(grid.n)
    for _ in range(n_bumps):
        center = grid.xi_min + span * rng.uniform(0.3, 0.7)
        width = span * rng.uniform(0.03, 0.1)
        out += rng.uniform(-1.0, 1.0) * np.exp(-(((xs - center) / width) ** 2))
    return out


def _core_window(grid: Grid) -> np.ndarray:
    """cos^2 window, exactly zero outside the middle 70% of the domain."""
    span = grid.xi_max - grid.xi_min
    mid = 0.5 * (grid.xi_min + grid.xi_max)
    t = (grid.nodes - mid) / (0.35 * span)
    w = np.where(np.abs(t) < 1.0, np.cos(0.5 * np.pi * np.clip(t, -1.0, 1.0)) ** 2, 0.0)
    return w


def random_admissible_state(
    grid: Grid,
    rng: np.random.Generator,
    amplitude: float = 0.4,
    n_bumps: int = 4,
    rho_amplitude: float | None = None,
) -> LagrangianState:
    """Random smooth state that satisfies the admissible-set conditions exactly.

    y_xi and U_xi are random windowed bump fields (U_xi with exactly zero
    trapezoid total so U returns to rest); y and U come from cumulative
    quadrature, so derivative/primary consistency is exact.  H_xi is then
    defined through the compatibility identity and H by quadrature, making
    the identity residual zero to roundoff.  All activity is confined to the
    middle of the domain.
    """
    if not 0.0 < amplitude < 1.0:
        raise ConfigError("amplitude must sit in (0, 1) to keep y_xi positive")
    if rho_amplitude is None:
        rho_amplitude = 0.5 * amplitude
    window = _core_window(grid)

    def scaled(n_b, amp):
        b = _bump_field(grid, rng, n_b) * window
        peak = float(np.max(np.abs(b)))
        return b * (amp / peak) if peak > 0 else b

    yxi = 1.0 + scaled(n_bumps, amplitude)
    y = grid.xi_min + cumulative_trapezoid(grid, yxi)

    Uxi = scaled(n_bumps, amplitude)
    total = float(np.trapezoid(Uxi, dx=grid.dxi))
    wpos = window / float(np.trapezoid(window, dx=grid.dxi))
    Uxi = Uxi - total * wpos
    U = cumulative_trapezoid(grid, Uxi)

    r = scaled(n_bumps, rho_amplitude)
    hxi = (yxi * yxi * U * U + Uxi * Uxi + r * r) / yxi
    H = cumulative_trapezoid(grid, hxi)
    return LagrangianState(grid=grid, y=y, U=U, H=H, r=r, yxi=yxi, Uxi=Uxi, hxi=hxi)


def random_eulerian_state(
    grid: Grid,
    rng: np.random.Generator,
    amplitude: float = 0.5,
    n_bumps: int = 3,
    rho_amplitude: float = 0.4,
) -> EulerianState:
    """Random admissible Eulerian triple with a purely absolutely continuous mu.

    u and rho are windowed bump fields and the density is u^2 + u_x^2 + rho^2
    with a central-difference slope, so the defining relation of the
    admissible triples holds by construction at the sampling resolution.
    Extra energy beyond that relation is not an option: the Lagrangian
    compatibility identity pins the density of any state with positive y_xi,
    and a surplus would surface as a velocity/derivative mismatch there.
    """
    window = _core_window(grid)
    u = _bump_field(grid, rng, n_bumps) * window
    peak = float(np.max(np.abs(u)))
    if peak > 0:
        u *= amplitude / peak
    rho = _bump_field(grid, rng, max(1, n_bumps - 1)) * window
    peak = float(np.max(np.abs(rho)))
    if peak > 0:
        rho *= rho_amplitude / peak
    ux = np.gradient(u, grid.dxi)
    density = u * u + ux * ux + rho * rho
    return EulerianState(grid=grid, u=u, rho=rho, mu=EnergyMeasure(grid, density))
