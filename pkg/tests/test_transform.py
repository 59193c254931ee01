import numpy as np
import pytest

from mfou.errors import NodeOutOfRange, NonMonotoneBracket, ResidualTooLarge
from mfou.numerics import RandomStream, TimeGrid
from mfou.paths import ProcessSpec, fgn_covariance_matrix, sample_mixed_path
from mfou.inference import compute_Z, reconstruct_X
from mfou.transform import (
    RESIDUAL_BOUND,
    SCHEME_VERSION,
    TransferKernel,
    _solved_indices,
    build_kernel,
    inverse_kernel,
    psi_offdiag,
    quadratic_variation,
    solve_g,
)


def test_solve_g_h_half_is_constant():
    grid = TimeGrid(2.0, 32)
    for j in (1, 7, 32):
        g = solve_g(0.5, grid, j)
        assert g.shape == (j,)
        assert np.max(np.abs(g - 0.5)) < 1e-8


def test_solve_g_validation():
    grid = TimeGrid(2.0, 32)
    with pytest.raises(ValueError):
        solve_g(1.0, grid, 4)  # H = 1 has no integral-equation kernel
    with pytest.raises(NodeOutOfRange):
        solve_g(0.7, grid, 0)
    with pytest.raises(NodeOutOfRange):
        solve_g(0.7, grid, 33)


def test_kernel_residual_contract(kernel_07):
    solved = ~kernel_07.interpolated
    assert np.all(np.isfinite(kernel_07.residuals[solved]))
    assert np.max(kernel_07.residuals[solved]) <= RESIDUAL_BOUND
    assert not kernel_07.any_interpolated  # every column dense at this size
    assert kernel_07.spot_error == 0.0
    assert kernel_07.meta["scheme_version"] == SCHEME_VERSION
    assert kernel_07.meta["solved_columns"] == 64


def test_kernel_column_layout(kernel_07):
    col = kernel_07.column(10)
    assert col.shape == (10,)
    assert np.array_equal(col, kernel_07.matrix[9, :10])
    assert np.all(kernel_07.matrix[9, 10:] == 0.0)
    with pytest.raises(NodeOutOfRange):
        kernel_07.column(65)


def test_solved_indices_structure():
    assert _solved_indices(64) == list(range(1, 65))
    thinned = _solved_indices(2048)
    assert thinned == sorted(set(thinned))
    assert thinned[-1] == 2048
    assert len(thinned) < 2048
    assert set(range(2045, 2049)).issubset(thinned)  # trailing block stays dense
    assert set(range(1, 1025)).issubset(thinned)  # everything below the limit
    assert 1026 not in thinned  # thinned to the stride above the limit


def test_bracket_h_half_linear(kernel_half, qv_half):
    # g = 1/2 makes <M>_t = t/2 with constant derivative, so psi = 2 exactly
    nodes = kernel_half.grid.nodes
    assert np.max(np.abs(qv_half.bracket - nodes / 2)) < 1e-8
    assert np.max(np.abs(qv_half.psi_diag - 2.0)) < 1e-8
    assert np.max(np.abs(qv_half.derivative - 0.5)) < 1e-8


def test_bracket_monotone(qv_07):
    assert np.all(np.diff(qv_07.bracket) > 0.0)
    assert np.all(qv_07.derivative > 0.0)
    assert np.all(qv_07.psi_diag > 0.0)
    assert np.array_equal(qv_07.bracket_increments(), np.diff(qv_07.bracket))


def test_bracket_variance_oracle(kernel_07, qv_07):
    # Var(M_t) = g^T C g with C the covariance of the mixed increments
    grid = kernel_07.grid
    for j in (16, 32, 64):
        g = kernel_07.column(j)
        c = grid.dt * np.eye(j) + fgn_covariance_matrix(j, kernel_07.hurst, grid.dt)
        quad = float(g @ c @ g)
        assert quad == pytest.approx(qv_07.bracket[j], rel=5e-3)


def test_quadratic_variation_rejects_nonmonotone():
    grid = TimeGrid(1.0, 8)
    matrix = np.tril(np.ones((8, 8)))
    matrix[1] *= -1.0  # second row sum below the first
    kern = TransferKernel(
        hurst=0.7,
        grid=grid,
        matrix=matrix,
        residuals=np.zeros(8),
        interpolated=np.zeros(8, dtype=bool),
    )
    with pytest.raises(NonMonotoneBracket):
        quadratic_variation(kern)


def test_psi_offdiag_symmetric(qv_07):
    s, t = 0.25, 1.5
    assert psi_offdiag(qv_07, s, t) == psi_offdiag(qv_07, t, s)
    assert psi_offdiag(qv_07, s, s) == pytest.approx(qv_07.psi_diag[qv_07.node_index(s)])


def test_qv_node_lookup(qv_07):
    assert qv_07.node_index(0.5) == 16
    with pytest.raises(NodeOutOfRange):
        qv_07.node_index(0.51)
    got = qv_07.psi_at_nodes([0.0, 0.5])
    assert got.shape == (2,)
    assert got[1] == qv_07.psi_diag[16]


def test_roundtrip_reconstruction(kernel_07, qv_07):
    spec = ProcessSpec(0.7, 1.0, kernel_07.grid)
    bundle = sample_mixed_path(spec, RandomStream(3, (1,)))
    z = compute_Z(bundle, kernel_07)
    inv = inverse_kernel(kernel_07, qv_07)
    back = reconstruct_X(z, inv)
    rel = np.max(np.abs(back - bundle.state)) / np.max(np.abs(bundle.state))
    assert rel < 0.02


def test_residual_guard_raises():
    # an operator too ill-conditioned to solve accurately must fail loudly
    from scipy.linalg import hilbert

    with pytest.raises(ResidualTooLarge):
        solve_g(0.7, TimeGrid(2.0, 32), 32, operator=hilbert(32))
