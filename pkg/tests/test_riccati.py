import math

import numpy as np
import pytest

from mfou.errors import BlowUp, ComplexEigenvalues
from mfou.riccati import (
    TRACE_BOUND_CONST,
    eigen_split,
    k_T_via_liouville,
    k_T_via_riccati,
    solve_M_equation,
    solve_riccati,
)


def cameron_martin_k(theta, mu, horizon):
    # classical OU with diffusion sqrt(2): the H = 1/2 reduction target
    gamma = math.sqrt(theta * theta + 2.0 * mu)
    c = theta / gamma
    inner = (1.0 + c) / 2.0 + ((1.0 - c) / 2.0) * math.exp(-2.0 * gamma * horizon)
    return theta / 2.0 - (gamma * horizon + math.log(inner)) / (2.0 * horizon)


def test_riccati_h_half_closed_form(qv_half):
    for mu in (0.25, 0.5, 1.0):
        run = solve_riccati(1.0, mu, qv_half)
        got = k_T_via_riccati(run)
        assert got == pytest.approx(cameron_martin_k(1.0, mu, 5.0), abs=1e-4)


def test_two_routes_agree(qv_07):
    run = solve_riccati(1.0, 0.5, qv_07)
    assert k_T_via_riccati(run) == pytest.approx(k_T_via_liouville(1.0, 0.5, qv_07), abs=1e-4)


def test_mu_zero_short_circuits(qv_07):
    assert k_T_via_riccati(solve_riccati(1.0, 0.0, qv_07)) == 0.0
    assert k_T_via_liouville(1.0, 0.0, qv_07) == 0.0


def test_prefix_horizon(qv_07):
    run = solve_riccati(1.0, 0.5, qv_07)
    short = solve_riccati(1.0, 0.5, qv_07, horizon=1.0)
    assert k_T_via_riccati(run, 1.0) == k_T_via_riccati(short)
    with pytest.raises(ValueError):
        k_T_via_riccati(run, 0.99)  # not a grid node


def test_run_metadata(qv_07):
    run = solve_riccati(1.2, 0.5, qv_07)
    assert run.theta == 1.2
    assert run.mu == 0.5
    assert run.times[0] == 0.0
    assert run.times[-1] == qv_07.grid.horizon
    assert np.all(np.isfinite(run.gamma))


def test_blowup_guard(qv_07):
    # mu far below -theta^2/2 sends the Laplace transform to infinity in
    # finite time; the solver must report the blow-up, not return garbage
    with pytest.raises(BlowUp) as err:
        solve_riccati(1.0, -2.0, qv_07)
    assert 0.0 < err.value.time <= qv_07.grid.horizon


def test_eigen_split_identities():
    lam, a_plus, a_minus = eigen_split(1.0, 0.5)
    assert lam == pytest.approx(math.sqrt(0.25 + 0.25))
    assert a_plus == pytest.approx(0.5 + lam)
    assert a_minus == pytest.approx(0.5 - lam)
    assert a_plus * a_minus == pytest.approx(-0.25)  # product is -mu/2
    with pytest.raises(ComplexEigenvalues):
        eigen_split(1.0, -0.7)


def test_m_equation_split_identity(qv_07):
    lam, _, _ = eigen_split(1.0, 0.5)
    run = solve_M_equation(lam, qv_07)
    assert np.array_equal(run.m_traj[0], -np.eye(2))
    j = qv_07.grid.cells // 2
    recon = np.linalg.solve(run.upsilon2[j], run.upsilon1[j])
    assert np.max(np.abs(run.m_traj[j] - recon)) < 1e-6
    assert run.trace_bound_ratios.shape == run.times.shape
    assert np.all(np.isfinite(run.trace_bound_ratios))
    assert run.trace_bound_max == np.max(run.trace_bound_ratios)


def test_m_equation_lam_zero_is_frozen(qv_07):
    run = solve_M_equation(0.0, qv_07)
    assert np.allclose(run.m_traj, -np.eye(2), atol=1e-14)
    assert run.upsilon1 is None
    with pytest.raises(ValueError):
        solve_M_equation(-0.1, qv_07)


def test_trace_bound_constant():
    assert TRACE_BOUND_CONST == pytest.approx(2.0 * math.sqrt(2.0))
