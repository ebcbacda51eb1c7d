import numpy as np
import pytest

from twoch.errors import ConfigError
from twoch.grid import (
    Grid,
    aligned_grid,
    cumulative_trapezoid,
    l2_norm,
    sup_norm,
    trapezoid_weights,
)


def test_nodes_and_spacing():
    g = Grid(-2.0, 2.0, 5)
    assert g.dxi == 1.0
    np.testing.assert_array_equal(g.nodes, [-2.0, -1.0, 0.0, 1.0, 2.0])
    assert not g.nodes.flags.writeable


def test_equality_ignores_node_array_identity():
    assert Grid(0.0, 1.0, 11) == Grid(0.0, 1.0, 11)
    assert Grid(0.0, 1.0, 11) != Grid(0.0, 1.0, 12)
    assert hash(Grid(0.0, 1.0, 11)) == hash(Grid(0.0, 1.0, 11))


@pytest.mark.parametrize("args", [
    (0.0, 1.0, 2),
    (1.0, 1.0, 5),
    (2.0, 1.0, 5),
    (float("nan"), 1.0, 5),
])
def test_bad_construction_rejected(args):
    with pytest.raises(ConfigError):
        Grid(*args)


def test_aligned_grid_puts_point_on_node():
    g = aligned_grid(-10.0, 10.0, 501, through=0.3141)
    err = np.min(np.abs(g.nodes - 0.3141))
    assert err < 1e-12
    assert g.n == 501
    assert abs(g.dxi - 20.0 / 500) < 1e-15
    # the translation stays under one spacing
    assert abs(g.xi_min + 10.0) <= 0.5 * g.dxi + 1e-12


def test_aligned_grid_rejects_outside_point():
    with pytest.raises(ConfigError):
        aligned_grid(0.0, 1.0, 11, through=2.0)


def test_trapezoid_weights_sum_to_length():
    g = Grid(-3.0, 5.0, 321)
    w = trapezoid_weights(g)
    assert abs(np.sum(w) - 8.0) < 1e-12
    assert w[0] == w[-1] == 0.5 * g.dxi


def test_cumulative_trapezoid_matches_antiderivative():
    g = Grid(0.0, np.pi, 2001)
    F = cumulative_trapezoid(g, np.sin(g.nodes))
    exact = 1.0 - np.cos(g.nodes)
    assert F[0] == 0.0
    assert sup_norm(F - exact) < 1e-6


def test_cumulative_trapezoid_second_order():
    errs = []
    for n in (101, 201):
        g = Grid(0.0, 1.0, n)
        F = cumulative_trapezoid(g, np.exp(g.nodes))
        errs.append(sup_norm(F - (np.exp(g.nodes) - 1.0)))
    assert errs[0] / errs[1] > 3.5


def test_l2_norm_of_constant():
    g = Grid(0.0, 4.0, 4001)
    assert abs(l2_norm(g, np.full(g.n, 3.0)) - 6.0) < 1e-12


def test_sup_norm_handles_empty():
    assert sup_norm(np.array([])) == 0.0
    assert sup_norm(np.array([-2.0, 1.0])) == 2.0
