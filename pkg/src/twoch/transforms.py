"""Maps between Eulerian triples and Lagrangian states.

``to_lagrangian`` inverts x + mu((-inf, x)) exactly: the measure's density is
piecewise linear, so the map is piecewise quadratic between atoms, and each
Lagrangian node is placed by solving its cell quadratic with the stable root
formula.  Atoms open plateaus of width equal to their mass, closed at both
ends in y and half-open in the derivative fields (right-continuous
convention).  The result sits on the section y + H = id by construction.

``to_eulerian`` pushes the energy back: intervals where y is flat (cell
slopes below a reported threshold) become atoms with the exact H-increment
as mass, while everywhere else the density is the ratio of interpolated
derivative fields composed with the generalized inverse of y.
"""

from __future__ import annotations

import numpy as np

from .errors import ConstraintViolation
from .eulerian import EnergyMeasure, EulerianState, cumulative
from .grid import Grid, cumulative_trapezoid
from .lagrangian import LagrangianState, invert_monotone

__all__ = ["to_lagrangian", "to_eulerian", "roundtrip_F0", "PLATEAU_EPS_DEFAULT"]

PLATEAU_EPS_DEFAULT = 1e-10


def to_lagrangian(z: EulerianState, grid: Grid) -> LagrangianState:
    """The map from an Eulerian triple to its Lagrangian representative.

    Places y by the generalized inverse of x + mu((-inf, x)) with the
    sup-convention (atoms become plateaus), sets H = xi - y, samples u and
    rho along y, and reconstructs U_xi from the compatibility identity with
    the sign of the local u slope.  Outside the measure's reach the state
    continues as vacuum.
    """
    xg = z.grid
    xn = xg.nodes
    dens = z.mu.density
    cum = cumulative_trapezoid(xg, dens)
    dslope = np.diff(dens) / xg.dxi
    base = xn + cum  # the atom-free part of x + cumulative, exact at the x-nodes

    xi = grid.nodes
    if z.mu.atoms:
        locs = np.array([a[0] for a in z.mu.atoms])
        mass = np.array([a[1] for a in z.mu.atoms])
        lower = np.array([loc + cumulative(z.mu, loc) for loc in locs])
        upper = lower + mass
        cmass = np.concatenate([[0.0], np.cumsum(mass)])
        target = xi - cmass[np.searchsorted(upper, xi, side="right")]
        pidx = np.searchsorted(lower, xi, side="right") - 1
        on_plateau = (pidx >= 0) & (xi < upper[np.clip(pidx, 0, len(locs) - 1)])
    else:
        target = xi.copy()
        on_plateau = np.zeros(grid.n, dtype=bool)

    # exact inversion of the piecewise-quadratic atom-free part
    j = np.clip(np.searchsorted(base, target, side="right") - 1, 0, xg.n - 2)
    delta = target - base[j]
    b = 1.0 + dens[j]
    s = dslope[j]
    disc = np.maximum(b * b + 2.0 * s * delta, 0.0)
    t = 2.0 * delta / (b + np.sqrt(disc))
    below = target <= base[0]
    above = target >= base[-1]
    inside = ~(below | above)
    y = np.where(below, target, np.where(above, target - cum[-1], xn[j] + t))
    dens_at = np.where(inside, dens[j] + s * t, 0.0)
    if z.mu.atoms:
        y[on_plateau] = locs[np.clip(pidx, 0, len(locs) - 1)][on_plateau]

    yxi = 1.0 / (1.0 + dens_at)
    yxi[on_plateau] = 0.0
    H = xi - y
    hxi = 1.0 - yxi
    U = np.interp(y, xn, z.u)
    rho_at = np.interp(y, xn, z.rho)
    r = rho_at * yxi

    # Beyond the spatial grid the measure is vacuum and u continues with its
    # edge value, so the pointwise bound is only meaningful inside the grid.
    rad = dens_at - U * U - rho_at * rho_at
    rad[on_plateau | ~inside] = 0.0
    scale = 1.0 + float(np.max(dens_at, initial=0.0))
    if float(np.min(rad, initial=0.0)) < -1e-10 * scale:
        raise ConstraintViolation(
            "energy density falls below u^2 + rho^2; the triple is not admissible"
        )
    rad = np.maximum(rad, 0.0)
    uslope = np.diff(z.u) / xg.dxi
    Uxi = np.sign(uslope[j]) * yxi * np.sqrt(rad)
    Uxi[on_plateau | ~inside] = 0.0

    return LagrangianState(grid=grid, y=y, U=U, H=H, r=r, yxi=yxi, Uxi=Uxi, hxi=hxi)


def _plateau_runs(flags: np.ndarray):
    """Maximal runs of True cells as (start_cell, end_cell) inclusive pairs."""
    padded = np.diff(np.r_[0, flags.astype(np.int8), 0])
    starts = np.flatnonzero(padded == 1)
    ends = np.flatnonzero(padded == -1) - 1
    return list(zip(starts, ends))


def to_eulerian(
    X: LagrangianState,
    spatial_grid: Grid,
    plateau_eps: float = PLATEAU_EPS_DEFAULT,
    u_plateau_tol: float | None = None,
) -> EulerianState:
    """Push a Lagrangian state to its Eulerian triple.

    Cells where the slope of y falls below plateau_eps times the largest
    slope are classified as flat; each maximal flat run becomes an atom at
    its y-value with mass equal to the H-increment across the run.  U is
    continuous in the label, so across each run it may vary by at most the
    quadrature of the run's own |U_xi| plus a continuity allowance of
    4 dxi (1 + sup|U_xi|) and the ``u_plateau_tol`` floor (default
    1e-6 * (1 + sup|U|)); a genuine jump in u across an atom violates that
    and is rejected, while the cell-scale churn of a crest whose forward
    cells have compressed below resolution passes.  Everywhere else u, rho,
    and the density come from composing with the generalized inverse of y.
    """
    g = X.grid
    dy = np.diff(X.y)
    span = float(X.y[-1] - X.y[0])
    if float(np.min(dy)) < -1e-10 * max(span, 1.0):
        raise ConstraintViolation("y is not monotone; state is outside the admissible set")
    y = np.maximum.accumulate(X.y)

    slopes = dy / g.dxi
    smax = float(np.max(slopes))
    if smax <= 0.0:
        raise ConstraintViolation("y is globally flat; no Eulerian image exists")
    theta = plateau_eps * smax
    if u_plateau_tol is None:
        u_plateau_tol = 1e-6 * (1.0 + float(np.max(np.abs(X.U))))

    atoms = []
    for a, b in _plateau_runs(slopes < theta):
        mass = float(X.H[b + 1] - X.H[a])
        useg = X.U[a:b + 2]
        du = float(np.max(useg) - np.min(useg))
        uxiseg = np.abs(X.Uxi[a:b + 2])
        cap = u_plateau_tol + 4.0 * (float(np.trapezoid(uxiseg, dx=g.dxi))
                                     + g.dxi * (1.0 + float(np.max(uxiseg))))
        if du > cap:
            raise ConstraintViolation(
                "u jumps across a flat segment of y; state violates the "
                "compatibility identity"
            )
        if mass > 0.0:
            atoms.append((float(y[a]), mass))
    # distinct plateaus have distinct y-values; merge only roundoff collisions
    merged = []
    for loc, mass in atoms:
        if merged and loc <= merged[-1][0]:
            prev_loc, prev_mass = merged.pop()
            merged.append((prev_loc, prev_mass + mass))
        else:
            merged.append((loc, mass))

    xs = spatial_grid.nodes
    gin = invert_monotone(y, g, xs)
    nodes = g.nodes
    u = np.interp(gin, nodes, X.U)
    yv = np.interp(gin, nodes, X.yxi)
    hv = np.interp(gin, nodes, X.hxi)
    rv = np.interp(gin, nodes, X.r)
    theta_node = plateau_eps * max(float(np.max(X.yxi)), 1e-300)
    ok = yv >= theta_node
    safe = np.where(ok, yv, 1.0)
    density = np.where(ok, hv / safe, 0.0)
    rho = np.where(ok, rv / safe, 0.0)
    low = float(np.min(density))
    if low < -1e-10 * (1.0 + abs(float(np.max(density)))):
        raise ConstraintViolation("reconstructed energy density is negative")
    density = np.maximum(density, 0.0)

    # A node whose preimage sits where characteristics have compressed to a
    # sliver samples hxi/yxi at a near-singular point, and its trapezoid
    # contribution can dwarf the mass the sliver actually carries.  Cap each
    # node by the H-increment across its neighbor preimages (atoms inside
    # the window excluded): for resolved fields the cap sits a quarter above
    # the cell average and never engages, at a sliver it pins the node to
    # the mass it represents.  H lives on the section y + H = id, so its
    # increments are quantized at the float spacing of xi itself; in a far
    # tail the window can read zero while hxi does not.  Widen the window by
    # that quantum, and never cap below u^2 + rho^2, which every admissible
    # density majorizes pointwise.
    Hg = np.interp(gin, nodes, X.H)
    locs = np.array([loc for loc, _ in merged])
    amass = np.concatenate(([0.0], np.cumsum([m for _, m in merged])))
    dx = spatial_grid.dxi
    ain = (amass[np.searchsorted(locs, xs + dx, side="left")]
           - amass[np.searchsorted(locs, xs - dx, side="right")])
    window = np.r_[Hg[1:], Hg[-1]] - np.r_[Hg[0], Hg[:-1]] - ain
    width = np.r_[dx, np.full(len(xs) - 2, 2.0 * dx), dx]
    quantum = 8.0 * np.finfo(np.float64).eps * max(abs(nodes[0]), abs(nodes[-1]))
    bound = u * u + rho * rho
    cap = np.maximum(1.25 * (np.maximum(window, 0.0) + quantum) / width, bound)
    density = np.where(ok, np.minimum(density, cap), density)

    # Reconcile the sampled density with the exact mass it represents: the
    # measure's absolutely continuous part carries H-increment mass.  Only
    # the slack above the pointwise bound u^2 + rho^2 is rescaled (an
    # O(dxi^2) change, the same order as the sampling itself), so the
    # trapezoid total becomes exact without ever dipping below the bound;
    # nodes with no slack, such as a crest where all energy is kinetic, are
    # left untouched.  Nodes masked to zero under a plateau are lifted to
    # the bound, which is what the absolutely continuous part looks like
    # next to the atom.
    slack = np.maximum(density - bound, 0.0)
    ac_mass = float(X.H[-1] - X.H[0]) - sum(m for _, m in merged)
    bound_mass = float(np.trapezoid(bound, dx=spatial_grid.dxi))
    slack_mass = float(np.trapezoid(slack, dx=spatial_grid.dxi))
    missing = ac_mass - bound_mass
    if slack_mass > 0.0 and missing > 0.0 and 0.25 < missing / slack_mass < 4.0:
        density = bound + slack * (missing / slack_mass)

    mu = EnergyMeasure(spatial_grid, density, tuple(merged))
    return EulerianState(grid=spatial_grid, u=u, rho=rho, mu=mu)


def roundtrip_F0(
    X: LagrangianState,
    spatial_grid: Grid | None = None,
    plateau_eps: float = PLATEAU_EPS_DEFAULT,
) -> LagrangianState:
    """to_lagrangian(to_eulerian(X)) on X's own grid.

    For states on the section y + H = id this is the identity up to
    interpolation error; with grid-aligned plateaus it is exact.
    """
    if spatial_grid is None:
        spatial_grid = Grid(float(X.y[0]), float(X.y[-1]), X.grid.n)
    z = to_eulerian(X, spatial_grid, plateau_eps=plateau_eps)
    return to_lagrangian(z, X.grid)
