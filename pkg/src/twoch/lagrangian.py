"""Lagrangian states, the admissible set checks, relabeling, and the F0 section.

A state collects the characteristic position y, the velocity U = u(y), the
cumulative energy H, and the Lagrangian density sample r = rho(y) y_xi, all on
one uniform grid, together with the three evolved derivative fields y_xi,
U_xi, H_xi.  Derivatives are carried as independent unknowns: they are never
re-differenced from the primary samples, only checked against them.

Membership in the admissible set requires, up to tolerances:

* y_xi >= 0,  H_xi >= 0,  y_xi + H_xi > 0,
* the compatibility identity  y_xi H_xi = y_xi^2 U^2 + U_xi^2 + r^2,
* H nondecreasing with H ~ 0 at the left boundary,
* derivative fields consistent with the primary fields under the trapezoid
  rule (up to the kink allowance, since piecewise-constant derivatives of
  piecewise-linear primaries carry O(dxi) trapezoid error per slope jump).

The section F0 is the set of states with y + H = id; ``project_F0`` maps onto
it by composing with the inverse of w = y + H.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ConstraintViolation
from .grid import Grid, cumulative_trapezoid, l2_norm, sup_norm

__all__ = [
    "LagrangianState",
    "ConstraintReport",
    "Relabeling",
    "check_in_G",
    "norm_E",
    "diff_norm_E",
    "diff_norm_sup",
    "max_field_difference",
    "invert_monotone",
    "relabel",
    "project_F0",
    "boundary_quiescence",
    "ground_state",
    "identity_relabeling",
    "shift_relabeling",
    "smooth_relabeling",
    "compose_relabelings",
    "invert_relabeling",
    "relabeling_norm",
]

_FIELDS = ("y", "U", "H", "r", "yxi", "Uxi", "hxi")


def _frozen_field(values, n: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.shape != (n,):
        raise ConfigError(f"field {name!r} has shape {arr.shape}, expected ({n},)")
    if not np.all(np.isfinite(arr)):
        raise ConstraintViolation(f"field {name!r} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LagrangianState:
    """Sampled Lagrangian state (y, U, H, r) with evolved derivative fields."""

    grid: Grid
    y: np.ndarray
    U: np.ndarray
    H: np.ndarray
    r: np.ndarray
    yxi: np.ndarray
    Uxi: np.ndarray
    hxi: np.ndarray

    def __post_init__(self):
        for name in _FIELDS:
            object.__setattr__(self, name, _frozen_field(getattr(self, name), self.grid.n, name))

    @property
    def zeta(self) -> np.ndarray:
        """Deviation of the characteristics from the identity, y - xi."""
        return self.y - self.grid.nodes

    @property
    def w(self) -> np.ndarray:
        """The relabeling candidate y + H whose inverse defines the F0 section."""
        return self.y + self.H

    def total_energy(self) -> float:
        """sup H, the total energy the state transports."""
        return float(np.max(self.H))

    def replace_fields(self, **kw) -> "LagrangianState":
        return replace(self, **kw)


def ground_state(grid: Grid) -> LagrangianState:
    """The vacuum state: y = id, everything else quiescent."""
    z = np.zeros(grid.n)
    return LagrangianState(
        grid=grid, y=grid.nodes.copy(), U=z, H=z, r=z,
        yxi=np.ones(grid.n), Uxi=z, hxi=z,
    )


# ---------------------------------------------------------------------------
# membership report


@dataclass(frozen=True)
class ConstraintReport:
    """Residuals of the admissible-set conditions; all residual fields are >= 0."""

    max_negative_yxi: float
    max_negative_hxi: float
    min_sum_yxi_hxi: float
    max_identity_residual: float
    h_monotonicity_violation: float
    left_decay: float
    max_consistency_residual: float
    max_f0_residual: float
    norm_E: float
    sup_H: float
    in_G: bool
    in_F0: bool

    def in_FM(self, m_bound: float) -> bool:
        """Membership in the energy-bounded slice: admissible and sup H <= M."""
        return self.in_G and self.sup_H <= m_bound


def _identity_residual(X: LagrangianState) -> np.ndarray:
    return X.yxi * X.hxi - (X.yxi * X.yxi * X.U * X.U + X.Uxi * X.Uxi + X.r * X.r)


def _consistency_residuals(X: LagrangianState):
    """Per-pair max |cumtrapz(deriv) - (primary - primary[0])| and its allowance."""
    g = X.grid
    out = []
    for prim, deriv in ((X.y, X.yxi), (X.U, X.Uxi), (X.H, X.hxi)):
        resid = sup_norm(cumulative_trapezoid(g, deriv) - (prim - prim[0]))
        tv = float(np.sum(np.abs(np.diff(deriv))))
        out.append((resid, g.dxi * (1.0 + tv)))
    return out


def check_in_G(
    X: LagrangianState,
    tol: float = 1e-8,
    tol_consistency: float | None = None,
    tol_decay: float = 1e-6,
) -> ConstraintReport:
    """Evaluate every admissible-set residual and the membership verdicts.

    ``tol`` bounds the sign conditions, the compatibility identity and the
    F0 residual.  Consistency of derivative against primary fields uses
    ``tol_consistency`` when given, otherwise a per-field allowance
    dxi * (1 + total variation of the derivative), which covers the
    trapezoid kink error of piecewise-linear data.  Monotonicity of the
    node values of H shares the allowance of the (H, hxi) pair: the
    membership condition proper is hxi >= 0, and a node-level dip of H
    within the quadrature drift between the two independently evolved
    fields is indistinguishable from that drift.  ``tol_decay`` bounds H
    at the left boundary.
    """
    neg_yxi = max(0.0, -float(np.min(X.yxi)))
    neg_hxi = max(0.0, -float(np.min(X.hxi)))
    min_sum = float(np.min(X.yxi + X.hxi))
    ident = sup_norm(_identity_residual(X))
    dH = np.diff(X.H)
    mono = max(0.0, float(np.max(-dH))) if len(dH) else 0.0
    left = abs(float(X.H[0]))
    cons = _consistency_residuals(X)
    cons_resid = max(c[0] for c in cons)
    if tol_consistency is None:
        cons_ok = all(resid <= allow for resid, allow in cons)
        mono_allow = max(tol, cons[2][1])
    else:
        cons_ok = cons_resid <= tol_consistency
        mono_allow = max(tol, tol_consistency)
    f0_resid = sup_norm(X.w - X.grid.nodes)
    in_g = (
        neg_yxi <= tol
        and neg_hxi <= tol
        and min_sum > 0.0
        and ident <= tol
        and mono <= mono_allow
        and left <= tol_decay
        and cons_ok
    )
    return ConstraintReport(
        max_negative_yxi=neg_yxi,
        max_negative_hxi=neg_hxi,
        min_sum_yxi_hxi=min_sum,
        max_identity_residual=ident,
        h_monotonicity_violation=mono,
        left_decay=left,
        max_consistency_residual=cons_resid,
        max_f0_residual=f0_resid,
        norm_E=norm_E(X),
        sup_H=float(np.max(X.H)),
        in_G=in_g,
        in_F0=in_g and f0_resid <= tol,
    )


# ---------------------------------------------------------------------------
# norms


def norm_E(X: LagrangianState) -> float:
    """Norm of the state space: sup norms of the primaries that only sit in
    L-infinity, L2 norms of everything with a square-integrable role.

    ||X|| = ||y-id||_inf + ||y_xi-1||_2 + ||U||_2 + ||U_xi||_2
            + ||H||_inf + ||H_xi||_2 + ||r||_2
    """
    g = X.grid
    return (
        sup_norm(X.zeta)
        + l2_norm(g, X.yxi - 1.0)
        + l2_norm(g, X.U)
        + l2_norm(g, X.Uxi)
        + sup_norm(X.H)
        + l2_norm(g, X.hxi)
        + l2_norm(g, X.r)
    )


def diff_norm_E(Xa: LagrangianState, Xb: LagrangianState) -> float:
    """E-norm of the field-wise difference of two states on one grid."""
    g = Xa.grid
    if g != Xb.grid:
        raise ConfigError("states live on different grids")
    return (
        sup_norm(Xa.y - Xb.y)
        + l2_norm(g, Xa.yxi - Xb.yxi)
        + l2_norm(g, Xa.U - Xb.U)
        + l2_norm(g, Xa.Uxi - Xb.Uxi)
        + sup_norm(Xa.H - Xb.H)
        + l2_norm(g, Xa.hxi - Xb.hxi)
        + l2_norm(g, Xa.r - Xb.r)
    )


def diff_norm_sup(Xa: LagrangianState, Xb: LagrangianState) -> float:
    """Sum of sup norms of the primary differences: ||y-y'|| + ||U-U'|| + ||H-H'||."""
    if Xa.grid != Xb.grid:
        raise ConfigError("states live on different grids")
    return sup_norm(Xa.y - Xb.y) + sup_norm(Xa.U - Xb.U) + sup_norm(Xa.H - Xb.H)


def max_field_difference(Xa: LagrangianState, Xb: LagrangianState) -> float:
    """Largest sup-norm difference over all eight stored fields."""
    return max(sup_norm(getattr(Xa, f) - getattr(Xb, f)) for f in _FIELDS)


# ---------------------------------------------------------------------------
# generalized inverse


def invert_monotone(values: np.ndarray, grid: Grid, targets: np.ndarray) -> np.ndarray:
    """Generalized inverse of the piecewise-linear map through (nodes, values).

    Returns g(t) = sup{xi : w(xi) < t} for each target t, the left-continuous
    convention: at the height of a flat step the inverse takes the step's left
    endpoint, and it jumps past the step just above that height.  Targets at
    or beyond the sampled range clamp to the corresponding boundary node
    (callers keep states quiescent there).
    """
    values = np.asarray(values, dtype=np.float64)
    targets = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    if np.any(np.diff(values) < 0.0):
        raise ConstraintViolation("invert_monotone needs a nondecreasing sample sequence")
    nodes = grid.nodes
    jl = np.searchsorted(values, targets, side="left")
    out = np.empty(targets.shape)
    below = jl == 0
    above = jl == grid.n
    out[below] = nodes[0]
    out[above] = nodes[-1]
    inside = ~(below | above)
    j = jl[inside]
    v_hi = values[j]
    v_lo = values[j - 1]
    # v_lo < t <= v_hi by the side="left" search; the cell slope is positive.
    frac = (v_hi - targets[inside]) / (v_hi - v_lo)
    out[inside] = nodes[j] - frac * grid.dxi
    return out


# ---------------------------------------------------------------------------
# relabeling


@dataclass(frozen=True)
class Relabeling:
    """Strictly increasing piecewise-linear reparametrization fixing the domain.

    ``values`` holds f at the grid nodes; f must map the grid interval onto
    itself (endpoints pinned), so compositions never need extrapolation.
    """

    grid: Grid
    values: np.ndarray
    deriv_cells: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != (self.grid.n,):
            raise ConfigError("relabeling values must match the grid size")
        if not np.all(np.isfinite(vals)):
            raise ConstraintViolation("relabeling contains non-finite entries")
        span = self.grid.xi_max - self.grid.xi_min
        if abs(vals[0] - self.grid.xi_min) > 1e-9 * span or abs(vals[-1] - self.grid.xi_max) > 1e-9 * span:
            raise ConstraintViolation("relabeling must fix the domain endpoints")
        vals[0] = self.grid.xi_min
        vals[-1] = self.grid.xi_max
        d = np.diff(vals) / self.grid.dxi
        if np.min(d) <= 0.0:
            raise ConstraintViolation("relabeling must be strictly increasing")
        vals.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "deriv_cells", d)

    @property
    def deriv_nodes(self) -> np.ndarray:
        """Right-continuous node samples of the exact piecewise-constant f_xi."""
        d = np.empty(self.grid.n)
        d[:-1] = self.deriv_cells
        d[-1] = self.deriv_cells[-1]
        return d


def identity_relabeling(grid: Grid) -> Relabeling:
    return Relabeling(grid, grid.nodes.copy())


def shift_relabeling(grid: Grid, shift: float, margin_fraction: float = 0.05,
                     ramp_fraction: float = 0.15) -> Relabeling:
    """Whole-cell shift in the core, ramped back to the identity at the margins.

    The shift snaps to a multiple of dxi so the core maps nodes onto nodes,
    which makes the group action on sampled states exact.  Ramps live inside
    the margins where admissible states are required to be quiescent.
    """
    m = int(round(shift / grid.dxi))
    n = grid.n
    i1 = max(1, int(n * margin_fraction))
    ramp = max(2 * abs(m) + 1, int(n * ramp_fraction))
    i2 = i1 + ramp
    i4 = n - 1 - i1
    i3 = i4 - ramp
    if not (0 < i1 < i2 < i3 < i4 < n - 1):
        raise ConfigError("grid too small (or shift too large) for the requested ramps")
    s = m * grid.dxi
    f = grid.nodes.copy()
    # core: exact node shift
    f[i2:i3 + 1] = grid.nodes[i2:i3 + 1] + s
    # ramps: linear between the pinned ends
    f[i1:i2 + 1] = np.linspace(grid.nodes[i1], grid.nodes[i2] + s, i2 - i1 + 1)
    f[i3:i4 + 1] = np.linspace(grid.nodes[i3] + s, grid.nodes[i4], i4 - i3 + 1)
    return Relabeling(grid, f)


def smooth_relabeling(grid: Grid, rng: np.random.Generator, kappa: float = 0.2,
                      n_modes: int = 3) -> Relabeling:
    """Random smooth perturbation of the identity with group norm about kappa."""
    span = grid.xi_max - grid.xi_min
    xs = grid.nodes
    g = np.zeros(grid.n)
    for _ in range(n_modes):
        center = grid.xi_min + span * rng.uniform(0.25, 0.75)
        width = span * rng.uniform(0.08, 0.2)
        amp = rng.uniform(-1.0, 1.0)
        g = g + amp * np.exp(-(((xs - center) / width) ** 2))
    # pin the endpoints exactly, then scale both sup|g| and sup|g'| to kappa/2
    g = g - np.linspace(g[0], g[-1], grid.n)
    dg = np.diff(g) / grid.dxi
    scale_to = 0.5 * kappa
    denom = max(sup_norm(g), sup_norm(dg), 1e-300)
    g = g * min(scale_to / denom, 0.45 / max(sup_norm(dg), 1e-300))
    return Relabeling(grid, xs + g)


def compose_relabelings(f_outer: Relabeling, f_inner: Relabeling) -> Relabeling:
    """The relabeling xi -> f_outer(f_inner(xi)) on the shared grid."""
    if f_outer.grid != f_inner.grid:
        raise ConfigError("relabelings live on different grids")
    vals = np.interp(f_inner.values, f_outer.grid.nodes, f_outer.values)
    return Relabeling(f_outer.grid, vals)


def invert_relabeling(f: Relabeling) -> Relabeling:
    return Relabeling(f.grid, invert_monotone(f.values, f.grid, f.grid.nodes))


def relabeling_norm(f: Relabeling) -> float:
    """max over f and its inverse of ||g - id||_inf + ||g' - 1||_inf."""
    shift = sup_norm(f.values - f.grid.nodes)
    d = f.deriv_cells
    fwd = shift + sup_norm(d - 1.0)
    inv = shift + sup_norm(1.0 / d - 1.0)
    return max(fwd, inv)


def _compose_state(X: LagrangianState, points: np.ndarray, point_deriv: np.ndarray) -> LagrangianState:
    """Sample X at monotone points and scale density fields by the point derivative."""
    nodes = X.grid.nodes
    prim = {k: np.interp(points, nodes, getattr(X, k)) for k in ("y", "U", "H")}
    dens = {k: np.interp(points, nodes, getattr(X, k)) * point_deriv for k in ("r", "yxi", "Uxi", "hxi")}
    return LagrangianState(grid=X.grid, **prim, **dens)


def relabel(X: LagrangianState, f: Relabeling) -> LagrangianState:
    """The group action X o f.

    Primary fields compose by piecewise-linear sampling; the density fields
    (y_xi, U_xi, H_xi, r) pick up the exact piecewise-constant derivative of
    f (right-continuous at the nodes).
    """
    if X.grid != f.grid:
        raise ConfigError("state and relabeling live on different grids")
    return _compose_state(X, f.values, f.deriv_nodes)


def project_F0(X: LagrangianState) -> LagrangianState:
    """Compose X with the inverse of w = y + H to land on the section y + H = id.

    w must be strictly increasing (y_xi + H_xi > 0); its piecewise-linear
    inverse is evaluated exactly, with the reciprocal cell slope as the exact
    derivative.  The result satisfies y + H = xi at the nodes to roundoff, so
    projecting twice is a no-op.
    """
    w = X.w
    dw = np.diff(w)
    if np.min(dw) <= 0.0:
        raise ConstraintViolation("cannot project: y + H is not strictly increasing")
    nodes = X.grid.nodes
    targets = np.clip(nodes, w[0], w[-1])
    g = invert_monotone(w, X.grid, targets)
    # exact derivative of the piecewise-linear inverse: reciprocal cell slope,
    # right-continuous at cell boundaries
    jr = np.clip(np.searchsorted(w, targets, side="right") - 1, 0, X.grid.n - 2)
    gxi = X.grid.dxi / dw[jr]
    return _compose_state(X, g, gxi)


def boundary_quiescence(X: LagrangianState, margin_fraction: float = 0.05) -> float:
    """Largest deviation from vacuum behavior inside the two boundary margins.

    Checks |U|, |y_xi - 1|, |H_xi|, |r| in both margins and |H| in the left
    margin.  zeta and the right-margin H are allowed arbitrary constants (an
    F0 state with energy E has zeta -> -E on the right).
    """
    m = max(2, int(X.grid.n * margin_fraction))
    bands = np.r_[0:m, X.grid.n - m:X.grid.n]
    dev = max(
        sup_norm(X.U[bands]),
        sup_norm(X.yxi[bands] - 1.0),
        sup_norm(X.hxi[bands]),
        sup_norm(X.r[bands]),
    )
    return max(dev, sup_norm(X.H[:m]))
