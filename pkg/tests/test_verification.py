import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_config
from salvoguide.errors import ModeError, ReferenceRangeError
from salvoguide.sim import run_scenario
from salvoguide.verification import (bump_trajectory, check_stationarity, cost_functional,
                                     evaluate_cost, exponential_reference, lyapunov_check,
                                     lyapunov_monitor, optimality_certificate)


def test_zero_trajectory_has_zero_cost():
    t = np.linspace(0, 1, 11)
    z = np.zeros((11, 3))
    assert cost_functional(t, z, z, z, z, 1.0, 1.0, 0.4, 0.3) == 0.0


def test_scalar_closed_form_and_certificate():
    c = optimality_certificate()
    assert c.relative_quadrature_error < 1e-6
    assert c.J_comparison.size == 20
    assert c.optimal_is_best
    assert np.all(np.abs(c.amplitudes) <= 0.1 * 7.1063)


def test_bumps_preserve_endpoints():
    t = np.linspace(0.0, 15.0, 101)
    R, k = exponential_reference(t, 7.1063, 0.01, 0.0, 15.0)
    Rb, _ = bump_trajectory(t, R, -k * R, 0.5, 0.0, 15.0)
    np.testing.assert_allclose(Rb[[0, -1]], R[[0, -1]], atol=1e-15)


def test_quadrature_converges_second_order():
    def J(n):
        t = np.linspace(0.0, 15.0, n + 1)
        R, k = exponential_reference(t, 7.1063, 0.01, 0.0, 15.0)
        return cost_functional(t, R, -k * R, 0 * t, 0 * t, 1.0, 1.0, k, 0.0)
    exact = optimality_certificate().J_closed_form
    e1, e2 = abs(J(1500) - exact), abs(J(3000) - exact)
    np.testing.assert_allclose(e1 / e2, 4.0, rtol=0.05)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=12, max_size=12), st.floats(0.1, 3), st.floats(0.1, 3))
def test_cost_nonnegative(v, P, K):
    t = np.linspace(0, 1, 3)
    a = np.array(v).reshape(4, 3)
    assert cost_functional(t, a[0], a[1], a[2], a[3], P, P, K, K) >= 0.0


def test_stationarity_on_known_trace(ex1_trace):
    rep = check_stationarity(ex1_trace)
    assert rep.passed(1e-5)
    assert rep.convex
    assert np.max(np.abs(rep.H_series)) < 1e-10
    assert abs(rep.H_terminal) < 1e-10
    np.testing.assert_allclose(rep.J, evaluate_cost(ex1_trace))
    # the alternative costate sign leaves a residual of 2 P1^2 |V_r(t0)| at t0
    assert np.all(rep.stationarity_R_flip >= 2 * np.abs(ex1_trace.V_r[0]) * (1 - 1e-12))


def test_cost_equals_hand_evaluation(ex1_trace):
    K1, K2 = ex1_trace.K1[0], ex1_trace.K2[0]
    integrand = 0.5 * np.sum(ex1_trace.V_r ** 2 + ex1_trace.dV_lam ** 2 + (K1 * ex1_trace.R) ** 2
                             + (K2 * ex1_trace.V_lam) ** 2, axis=1)
    np.testing.assert_allclose(evaluate_cost(ex1_trace), np.trapezoid(integrand, ex1_trace.t), rtol=1e-14)


def test_truncated_trace_has_no_cost(ex2_trace):
    with pytest.raises(ReferenceRangeError):
        evaluate_cost(ex2_trace)
    assert np.isnan(check_stationarity(ex2_trace).J)


def test_stationarity_residual_grows_with_radial_offset():
    worst = []
    for bias in (0.0, 0.005, 0.01, 0.02):
        tr = run_scenario(small_config(radial_bias=bias))
        assert tr.complete
        worst.append(np.max(check_stationarity(tr).stationarity_R))
    assert worst[0] < 1e-8
    assert np.all(np.diff(worst) > 0)


def test_lyapunov_requires_observer(ex1_trace):
    with pytest.raises(ModeError):
        lyapunov_monitor(ex1_trace)


def test_lyapunov_perfect_observer_decreases():
    t = np.linspace(0.0, 10.0, 1001)
    k1, k2 = 0.4, 0.3
    R = 7.0 * np.exp(-k1 * t)
    Vl = -1.5 * np.exp(-k2 * t)
    z = np.zeros_like(t)
    rep = lyapunov_check(t, R, -k1 * R, Vl, -k2 * Vl, k1, k2, z, z)
    assert np.all(rep.dV_series < 0) and rep.monotone and rep.bound_ok
    np.testing.assert_allclose(rep.dV_series, rep.bound_series, rtol=1e-12)
    np.testing.assert_allclose(np.gradient(rep.V_series, t)[1:-1], rep.dV_series[1:-1], rtol=1e-3)


def test_lyapunov_equilibrium():
    z = np.zeros((5, 2))
    rep = lyapunov_check(np.arange(5.0), z, z, z, z, 0.4, 0.3, z, z)
    np.testing.assert_array_equal(rep.V_series, 0.0)
    np.testing.assert_array_equal(rep.dV_series, 0.0)


def test_lyapunov_monotone_on_observed_example(ex2_trace):
    rep = lyapunov_monitor(ex2_trace)
    assert rep.monotone
    assert np.all(rep.V_series >= 0)


@pytest.mark.xfail(strict=True, reason="observation-error cross term exceeds the reference-decay "
                                       "bound early in the run (see decisions ledger)")
def test_lyapunov_sample_bound_on_observed_example(ex2_trace):
    assert lyapunov_monitor(ex2_trace).bound_ok


def test_verification_does_not_mutate(ex1_trace):
    before = ex1_trace.R.copy()
    check_stationarity(ex1_trace)
    np.testing.assert_array_equal(ex1_trace.R, before)
    assert dataclasses.is_dataclass(ex1_trace)
