import numpy as np
import pytest

from mfou.errors import (
    GridTooCoarse,
    LengthMismatch,
    NotPositiveDefinite,
    SingularMatrix,
)
from mfou.numerics import (
    MIN_CELLS,
    RandomStream,
    TimeGrid,
    cholesky_factor,
    finite_diff_derivative,
    ito_sum,
    solve_dense,
    trapezoid_integral,
    trapezoid_running,
)


def test_grid_nodes_and_dt():
    grid = TimeGrid(2.0, 10)
    assert grid.dt == 0.2
    assert grid.n == 10
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == 2.0
    assert grid.nodes.shape == (11,)
    assert np.allclose(np.diff(grid.nodes), 0.2)
    assert np.allclose(grid.midpoints, grid.nodes[:-1] + 0.1)


def test_grid_nodes_frozen():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(ValueError):
        grid.nodes[0] = 1.0


def test_grid_index_of():
    grid = TimeGrid(4.0, 16)
    assert grid.index_of(0.0) == 0
    assert grid.index_of(1.0) == 4
    assert grid.index_of(4.0) == 16
    with pytest.raises(ValueError):
        grid.index_of(1.1)
    with pytest.raises(ValueError):
        grid.index_of(4.25)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 16)
    with pytest.raises(ValueError):
        TimeGrid(-1.0, 16)
    with pytest.raises(ValueError):
        TimeGrid(float("inf"), 16)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 10.5)
    with pytest.raises(GridTooCoarse):
        TimeGrid(1.0, MIN_CELLS - 1)


def test_stream_is_deterministic():
    a = RandomStream(123, (1, 2)).normals(8)
    b = RandomStream(123, (1, 2)).normals(8)
    assert np.array_equal(a, b)


def test_stream_children_differ():
    base = RandomStream(123)
    a = base.child(0).normals(8)
    b = base.child(1).normals(8)
    c = base.child(0, 1).normals(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert base.child(0).key == (0,)
    assert base.child(0, 1).key == (0, 1)


def test_stream_order_independent():
    # drawing from one address must not perturb another
    first = RandomStream(9, (4,)).normals(4)
    RandomStream(9, (5,)).normals(100)
    again = RandomStream(9, (4,)).normals(4)
    assert np.array_equal(first, again)


def test_stream_rejects_bad_seed():
    with pytest.raises(ValueError):
        RandomStream(-1)
    with pytest.raises(ValueError):
        RandomStream(1.5)


def test_cholesky_known_factor():
    a = np.array([[4.0, 2.0], [2.0, 3.0]])
    low = cholesky_factor(a)
    assert np.allclose(low, [[2.0, 0.0], [1.0, np.sqrt(2.0)]])
    assert np.allclose(low @ low.T, a)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite) as err:
        cholesky_factor(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert err.value.pivot == 2


def test_cholesky_jitters_marginal_matrix():
    # indefinite only by an amount the jitter retry should absorb
    a = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-14]])
    low = cholesky_factor(a)
    assert np.allclose(low @ low.T, a, atol=1e-10)


def test_solve_dense_matches_numpy():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 6)) + 6.0 * np.eye(6)
    b = rng.standard_normal(6)
    assert np.allclose(solve_dense(a, b), np.linalg.solve(a, b))


def test_solve_dense_singular():
    with pytest.raises(SingularMatrix):
        solve_dense(np.zeros((3, 3)), np.ones(3))


def test_trapezoid_square_oracle():
    # trapezoid of t^2 on [0,1] with 10 cells is exactly 1/3 + dt^2/6 = 0.335
    nodes = np.linspace(0.0, 1.0, 11)
    inc = np.full(10, 0.1)
    assert trapezoid_integral(nodes**2, inc) == pytest.approx(0.335, abs=1e-12)


def test_trapezoid_running_consistent():
    rng = np.random.default_rng(11)
    v = rng.standard_normal(33)
    inc = rng.random(32) + 0.1
    run = trapezoid_running(v, inc)
    assert run[0] == 0.0
    assert run[-1] == pytest.approx(trapezoid_integral(v, inc))
    assert run.shape == v.shape


def test_trapezoid_length_check():
    with pytest.raises(LengthMismatch):
        trapezoid_integral(np.ones(5), np.ones(5))


def test_ito_sum_telescoping_identity():
    # sum X dX = (X_n^2 - X_0^2)/2 - (1/2) sum (dX)^2
    rng = np.random.default_rng(21)
    x = np.cumsum(rng.standard_normal(200))
    s = ito_sum(x, x)
    expected = 0.5 * (x[-1] ** 2 - x[0] ** 2) - 0.5 * np.sum(np.diff(x) ** 2)
    assert s[0] == 0.0
    assert s[-1] == pytest.approx(expected)


def test_ito_sum_ignores_last_integrand_value():
    x = np.array([0.0, 1.0, 3.0])
    f = np.array([2.0, 5.0, 999.0])
    assert np.array_equal(ito_sum(f, x), [0.0, 2.0, 12.0])


def test_ito_sum_length_check():
    with pytest.raises(LengthMismatch):
        ito_sum(np.ones(4), np.ones(5))


def test_finite_diff_cubic():
    # second-order stencils differentiate t^3 with O(dx^2) error, exact for t^2
    dx = 0.01
    t = np.arange(0.0, 1.0 + dx / 2, dx)
    d = finite_diff_derivative(t**3, dx)
    assert d.shape == t.shape
    assert np.max(np.abs(d - 3.0 * t**2)) < 1e-3
    exact = finite_diff_derivative(t**2, dx)
    assert np.max(np.abs(exact - 2.0 * t)) < 1e-10
