import numpy as np
import pytest

from twoch.errors import ConfigError, ConstraintViolation
from twoch.grid import Grid, cumulative_trapezoid, l2_norm, sup_norm
from twoch.lagrangian import (
    LagrangianState,
    Relabeling,
    boundary_quiescence,
    check_in_G,
    compose_relabelings,
    diff_norm_E,
    diff_norm_sup,
    ground_state,
    identity_relabeling,
    invert_monotone,
    invert_relabeling,
    max_field_difference,
    norm_E,
    project_F0,
    relabel,
    relabeling_norm,
    shift_relabeling,
    smooth_relabeling,
)
from twoch.oracles import random_admissible_state

from conftest import assert_states_close, unit_shift


# ---------------------------------------------------------------------------
# states and membership


def test_ground_state_is_vacuum(desk_grid):
    X = ground_state(desk_grid)
    rep = check_in_G(X)
    assert rep.in_G and rep.in_F0
    assert rep.norm_E == 0.0
    assert X.total_energy == 0.0
    assert sup_norm(X.zeta) == 0.0
    np.testing.assert_array_equal(X.w, desk_grid.nodes)


def test_state_rejects_wrong_length(desk_grid):
    z = np.zeros(desk_grid.n - 1)
    with pytest.raises(ConfigError):
        LagrangianState(grid=desk_grid, y=z, U=z, H=z, r=z,
                        yxi=z, Uxi=z, hxi=z)


def test_replace_fields_returns_new_state(desk_grid):
    X = ground_state(desk_grid)
    Y = X.replace_fields(U=np.ones(desk_grid.n))
    assert sup_norm(Y.U) == 1.0
    assert sup_norm(X.U) == 0.0


def test_random_states_are_admissible(desk_grid, rng):
    for k in range(20):
        X = random_admissible_state(
            desk_grid, rng,
            rho_amplitude=None if k % 2 == 0 else 0.3)
        rep = check_in_G(X)
        assert rep.in_G, f"state {k}: {rep}"
        assert rep.max_identity_residual <= 1e-12
        assert rep.max_negative_yxi == 0.0


def test_check_rejects_negative_yxi(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    bad = X.yxi.copy()
    bad[desk_grid.n // 2] = -0.05
    rep = check_in_G(X.replace_fields(yxi=bad))
    assert not rep.in_G
    assert rep.max_negative_yxi == pytest.approx(0.05)


def test_check_rejects_broken_identity(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    rep = check_in_G(X.replace_fields(hxi=X.hxi + 0.01))
    assert not rep.in_G
    assert rep.max_identity_residual > 1e-3


def test_check_rejects_decreasing_H(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    H = X.H.copy()
    H[desk_grid.n // 2] -= 0.2
    rep = check_in_G(X.replace_fields(H=H))
    assert not rep.in_G


def test_energy_slice_membership(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    rep = check_in_G(X)
    assert rep.in_FM(rep.sup_H + 1.0)
    assert not rep.in_FM(rep.sup_H * 0.5)


# ---------------------------------------------------------------------------
# norms


def test_norm_E_hand_value():
    # constant fields on a unit-length grid: every integral is exact
    g = Grid(0.0, 1.0, 101)
    z = np.zeros(g.n)
    X = LagrangianState(
        grid=g, y=g.nodes + 0.25, U=np.full(g.n, 2.0), H=np.full(g.n, 3.0),
        r=np.full(g.n, 0.5), yxi=np.ones(g.n), Uxi=z, hxi=z,
    )
    # 0.25 (zeta sup) + 0 + 2 (U L2) + 0 + 3 (H sup) + 0 + 0.5 (r L2)
    assert norm_E(X) == pytest.approx(5.75, abs=1e-12)


def test_diff_norms_vacuum_vs_energy_step(desk_grid):
    # a state holding one unit of energy on a collapsed interval against
    # vacuum: primary sups are |zeta| = 0, |U| = 0, |H| = 1
    X0 = ground_state(desk_grid)
    H = np.clip(desk_grid.nodes - 0.0, 0.0, 1.0)
    X1 = X0.replace_fields(H=H)
    assert diff_norm_sup(X0, X1) == pytest.approx(1.0)
    assert diff_norm_E(X0, X1) >= 1.0


def test_diff_norm_requires_shared_grid(desk_grid):
    other = Grid(-25.0, 25.0, 999)
    with pytest.raises(ConfigError):
        diff_norm_E(ground_state(desk_grid), ground_state(other))


def test_max_field_difference(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    Y = X.replace_fields(U=X.U + 0.125)
    assert max_field_difference(X, Y) == pytest.approx(0.125)


# ---------------------------------------------------------------------------
# generalized inverse


def test_invert_monotone_left_endpoint_at_plateau():
    g = Grid(0.0, 4.0, 5)
    w = np.array([0.0, 1.0, 1.0, 1.0, 2.0])
    # at the plateau height the inverse must take the step's LEFT endpoint
    got = invert_monotone(w, g, np.array([1.0]))
    assert got[0] == pytest.approx(1.0, abs=1e-14)
    # just above the plateau it jumps past the step
    got = invert_monotone(w, g, np.array([1.0 + 1e-9]))
    assert got[0] >= 3.0


def test_invert_monotone_exact_on_nodes():
    g = Grid(-1.0, 1.0, 21)
    w = 2.0 * g.nodes + 1.0
    got = invert_monotone(w, g, w.copy())
    assert sup_norm(got - g.nodes) < 1e-14


def test_invert_monotone_interpolates_linearly():
    g = Grid(0.0, 1.0, 11)
    w = 3.0 * g.nodes
    got = invert_monotone(w, g, np.array([0.15]))
    assert got[0] == pytest.approx(0.05, abs=1e-14)


def test_invert_monotone_clamps_out_of_range():
    g = Grid(0.0, 1.0, 11)
    w = g.nodes.copy()
    got = invert_monotone(w, g, np.array([-5.0, 5.0]))
    assert got[0] == 0.0 and got[1] == 1.0


def test_invert_monotone_rejects_decreasing():
    g = Grid(0.0, 1.0, 11)
    with pytest.raises(ConstraintViolation):
        invert_monotone(-g.nodes, g, np.array([0.5]))


# ---------------------------------------------------------------------------
# relabelings


def test_relabeling_endpoint_pinning(desk_grid):
    vals = desk_grid.nodes.copy()
    vals[0] += 0.5
    with pytest.raises(ConstraintViolation):
        Relabeling(desk_grid, vals)


def test_relabeling_must_increase(desk_grid):
    vals = desk_grid.nodes.copy()
    vals[10] = vals[12]
    vals[11] = vals[12]
    with pytest.raises(ConstraintViolation):
        Relabeling(desk_grid, vals)


def test_shift_relabeling_moves_core_by_whole_cells(desk_grid):
    f = shift_relabeling(desk_grid, shift=0.5)
    m = int(round(0.5 / desk_grid.dxi))
    mid = desk_grid.n // 2
    assert f.values[mid] == pytest.approx(desk_grid.nodes[mid + m], abs=1e-12)
    assert relabeling_norm(f) > 0.0


def test_compose_and_invert_relabelings(desk_grid):
    f = shift_relabeling(desk_grid, shift=0.4)
    finv = invert_relabeling(f)
    both = compose_relabelings(f, finv)
    assert sup_norm(both.values - desk_grid.nodes) < 1e-10
    assert relabeling_norm(identity_relabeling(desk_grid)) == 0.0


def test_smooth_relabeling_in_group_ball(desk_grid, rng):
    for _ in range(5):
        f = smooth_relabeling(desk_grid, rng, kappa=0.2)
        assert relabeling_norm(f) <= 0.9
        assert np.min(f.deriv_cells) > 0.0


def test_relabel_identity_is_noop(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    Y = relabel(X, identity_relabeling(desk_grid))
    assert_states_close(X, Y, 1e-14)


def test_relabel_composition_consistency(desk_grid, rng):
    # (X o f) o g == X o (f o g) exactly for whole-cell shifts whose ramps
    # stay inside the vacuum margins (activity lives in indices 150..850)
    X = random_admissible_state(desk_grid, rng)
    f = unit_shift(desk_grid, 20, 80, 920, 980, 3)
    g = unit_shift(desk_grid, 25, 85, 915, 975, -2)
    lhs = relabel(relabel(X, f), g)
    rhs = relabel(X, compose_relabelings(f, g))
    assert_states_close(lhs, rhs, 1e-10)


def test_relabel_preserves_admissibility(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    f = unit_shift(desk_grid, 20, 140, 860, 980, 5)
    rep = check_in_G(relabel(X, f), tol=1e-8)
    assert rep.in_G


def test_relabel_smooth_admissible_at_grid_tolerance(desk_grid, rng):
    # generic smooth relabelings resample, so the identity residual floors
    # at the composition's interpolation error, not at roundoff
    X = random_admissible_state(desk_grid, rng)
    f = smooth_relabeling(desk_grid, rng, kappa=0.2)
    rep = check_in_G(relabel(X, f), tol=0.05)
    assert rep.in_G


# ---------------------------------------------------------------------------
# projection


def test_project_F0_lands_on_section(desk_grid, rng):
    X = relabel(random_admissible_state(desk_grid, rng),
                unit_shift(desk_grid, 100, 300, 700, 900, 4))
    P = project_F0(X)
    assert sup_norm(P.w - desk_grid.nodes) < 1e-10


def test_project_F0_idempotent(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    P1 = project_F0(X)
    P2 = project_F0(P1)
    assert max_field_difference(P1, P2) < 1e-10


def test_project_F0_invariant_under_shift(desk_grid, rng):
    X = random_admissible_state(desk_grid, rng)
    f = unit_shift(desk_grid, 20, 140, 860, 980, 6)
    Pa = project_F0(X)
    Pb = project_F0(relabel(X, f))
    assert_states_close(Pa, Pb, 1e-9)


def test_project_F0_rejects_collapsed_w(desk_grid):
    X = ground_state(desk_grid)
    yxi = X.yxi.copy()
    yxi[300:320] = 0.0
    y = desk_grid.xi_min + cumulative_trapezoid(desk_grid, yxi)
    with pytest.raises(ConstraintViolation):
        project_F0(X.replace_fields(y=y, yxi=yxi))


def test_boundary_quiescence_ground_and_random(desk_grid, rng):
    assert boundary_quiescence(ground_state(desk_grid)) == 0.0
    X = random_admissible_state(desk_grid, rng)
    assert boundary_quiescence(X) < 1e-12
