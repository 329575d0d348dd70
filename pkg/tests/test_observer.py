import numpy as np
import pytest

from salvoguide.integrate import rk4_solve
from salvoguide.kinematics import RelativeState
from salvoguide.observer import ExoModel, exo_step_truth, forcing_signals, observer_derivative


def test_exo_truth_values():
    assert exo_step_truth(ExoModel(0.0, 0.1), 3.0) == 0.1
    np.testing.assert_allclose(exo_step_truth(ExoModel(-2.0, 0.1), 1.0), 0.013533528323661269, rtol=1e-15)
    assert exo_step_truth(ExoModel(-2.0, 0.1), 0.0) == 0.1


def test_positive_decay_rejected():
    with pytest.raises(ValueError):
        ExoModel(0.5, 0.1)


def test_exo_truth_matches_integration():
    m = ExoModel(-2.0, 0.1)
    t = np.linspace(0.0, 8.0, 8001)
    y = rk4_solve(lambda t, y: m.s * y, t, [m.A_T0])[:, 0]
    np.testing.assert_allclose(y, exo_step_truth(m, t), rtol=1e-12, atol=1e-15)


def test_observer_derivative_cases():
    rel = RelativeState(R=1.0, lam=0.0, V_r=0.0, V_lam=0.0, phi=0.3)
    assert observer_derivative(0.1, rel, -2.0) == -0.2
    rel = RelativeState(R=1.0, lam=0.0, V_r=5.0, V_lam=1.0, phi=0.0)
    np.testing.assert_allclose(observer_derivative(0.1, rel, -2.0), 0.8, rtol=1e-15)
    rel = RelativeState(R=1.0, lam=0.0, V_r=5.0, V_lam=1.0, phi=np.pi / 2)
    np.testing.assert_allclose(observer_derivative(0.0, rel, -2.0), -5.0, atol=1e-15)


def test_forcing_modes():
    rel = RelativeState(R=1.0, lam=0.0, V_r=-2.0, V_lam=0.5, phi=0.0)
    assert forcing_signals("measured", rel, -1.0, 0.1) == (-2.0, 0.5)
    assert forcing_signals("reference", rel, -1.0, 0.1) == (-1.0, 0.1)
    assert forcing_signals("tracking_error", rel, -1.0, 0.1) == (-1.0, 0.4)
    with pytest.raises(ValueError):
        forcing_signals("bogus", rel, 0.0, 0.0)
