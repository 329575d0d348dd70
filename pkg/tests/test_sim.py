import dataclasses

import numpy as np
import pytest

from conftest import small_config
from salvoguide.errors import ConfigError
from salvoguide.graph import CommGraph
from salvoguide.kinematics import AttackerState, TargetState, propagate_absolute, relative_from_absolute
from salvoguide.scenario import example1, example2
from salvoguide.sim import (ScenarioConfig, SimTrace, TargetManeuver, _crossings, detect_simultaneity,
                            run_scenario)
from salvoguide.verification import check_stationarity


def test_determinism():
    a, b = run_scenario(small_config(law="observed")), run_scenario(small_config(law="observed"))
    for f in dataclasses.fields(SimTrace):
        x, y = getattr(a, f.name), getattr(b, f.name)
        if isinstance(x, np.ndarray):
            assert x.tobytes() == y.tobytes(), f.name


def test_series_share_grid(ex1_trace):
    M = ex1_trace.t.size
    assert M == 15001 and ex1_trace.t[-1] == 15.0
    for f in dataclasses.fields(SimTrace):
        v = getattr(ex1_trace, f.name)
        if isinstance(v, np.ndarray):
            assert v.shape[0] == M, f.name
            assert np.all(np.isfinite(v)), f.name


def test_known_mode_tracking_and_costates(ex1_trace):
    assert ex1_trace.complete
    assert np.max(np.abs(ex1_trace.R - ex1_trace.R_star)) <= 1e-6
    assert np.max(np.abs(ex1_trace.V_lam - ex1_trace.V_lam_star)) <= 1e-6
    rep = check_stationarity(ex1_trace)
    assert np.max(rep.stationarity_R) < 1e-8
    assert np.max(rep.costate_R_residual) < 1e-5


def test_costate_initialisation(ex1_trace):
    np.testing.assert_array_equal(ex1_trace.rho_R[0], -ex1_trace.V_r[0])
    np.testing.assert_array_equal(ex1_trace.rho_Vlam[0], -ex1_trace.dV_lam[0])
    np.testing.assert_array_equal(ex1_trace.rho_R_flip[0], ex1_trace.V_r[0])
    np.testing.assert_array_equal(ex1_trace.rho_Vlam_flip[0], ex1_trace.dV_lam[0])


def test_initial_positions_and_relay(ex1_trace):
    np.testing.assert_allclose(ex1_trace.positions[0, 0], [2.0002048052809883, 6.0001220800618318],
                               rtol=1e-13)
    assert ex1_trace.relay_error < 1e-12


def test_target_speed_conserved(ex1_trace):
    # central differences of the logged target positions recover V_T
    p, t = ex1_trace.target_position, ex1_trace.t
    v = (p[2:] - p[:-2]) / (t[2:] - t[:-2])[:, None]
    np.testing.assert_allclose(np.hypot(v[:, 0], v[:, 1]), 1.0, rtol=1e-6)


def test_geometry_initialisation_reproduces_attacker_speed():
    tr = run_scenario(small_config(initial_velocity="geometry"))
    np.testing.assert_allclose(tr.attacker_speed[0], 0.7, rtol=1e-12)
    np.testing.assert_allclose(tr.attacker_heading[0], [0.6283, -1.0472, -1.0472, 1.5708], atol=1e-12)
    np.testing.assert_allclose(tr.V_lam[0], [-1.63421336, 0.30991105, -0.88812831, -0.0722264], atol=1e-8)


def test_ballistic_head_on_closing():
    # zero-acceleration head-on pair: R falls linearly at V_i + V_T until the hit
    att = AttackerState(position=[0.0, 0.0], heading=0.0, speed=0.7)
    tgt = TargetState(position=[5.0, 0.0], heading=0.0, speed=1.0)
    times = np.linspace(0.0, 2.9, 30)
    R = []
    for t in times:
        a, g = propagate_absolute(att, tgt, t, 1e-2) if t > 0 else (att, tgt)
        R.append(relative_from_absolute(a, g).R)
    R = np.array(R)[:, None]
    np.testing.assert_allclose(R[:, 0], 5.0 - 1.7 * times, atol=1e-12)
    np.testing.assert_allclose(_crossings(times, R, 0.1), [(5.0 - 0.1) / 1.7], rtol=1e-12)


def test_rk4_fourth_order_on_short_run():
    def terminal(dt):
        tr = run_scenario(small_config(law="observed", dt=dt, maneuver=example2().maneuver))
        return np.concatenate([tr.R[-1], tr.V_r[-1], tr.A_T_hat[-1]])
    y = [terminal(dt) for dt in (0.04, 0.02, 0.01)]
    ratio = np.max(np.abs(y[0] - y[1])) / np.max(np.abs(y[1] - y[2]))
    assert 8.0 < ratio < 32.0


def test_identical_attackers_hit_simultaneously():
    cfg = small_config(lam0=[0.3] * 2, gamma0=[0.5] * 2, R0=[6.0] * 2, Vlam0=[-0.5] * 2,
                       Rf=[1.0] * 2, Vlamf=[0.05] * 2, speeds=[0.7] * 2, graph=CommGraph.complete(2, 2.0))
    tr = run_scenario(cfg)
    rep = detect_simultaneity(tr)
    assert rep.all_hit and rep.spread == 0.0
    assert tr.hits == [(1, 3.0), (2, 3.0)]


def test_predicted_impact_time():
    tr = run_scenario(small_config())
    R = tr.R.copy()
    V_r = tr.V_r.copy()
    R[-1], V_r[-1] = 0.01, -0.004377
    rep = detect_simultaneity(dataclasses.replace(tr, R=R, V_r=V_r))
    np.testing.assert_allclose(rep.t_c, 0.01 / 0.004377, rtol=1e-15)
    np.testing.assert_allclose(rep.t_c, 2.2846, atol=1e-4)
    np.testing.assert_allclose(rep.predicted_T, 3.0 + 0.01 / 0.004377, rtol=1e-15)


def test_no_hit_reported_as_nan():
    tr = run_scenario(small_config(kill_radius=0.5))
    rep = detect_simultaneity(tr)
    assert tr.hits == [] and np.all(np.isnan(rep.hit_times)) and np.isnan(rep.spread)


def test_singular_geometry_truncates(ex2_trace):
    assert ex2_trace.status == "singular"
    assert "singular geometry" in ex2_trace.diagnostics[0]
    assert ex2_trace.R.shape[0] == ex2_trace.t.size < 8001
    with pytest.raises(ValueError):
        detect_simultaneity(ex2_trace)


def test_divergence_aborts_with_step():
    tr = run_scenario(small_config(radial_bias=np.inf))
    assert tr.status == "diverged"
    # the first RK4 stage already produces an infinite rate, so step 0 is blamed
    assert tr.diagnostics[0].startswith("step 0 ")


def test_infeasible_consensus_segments():
    tr = run_scenario(example2(law="piecewise", segments=4, piecewise_terminal="consensus"))
    assert tr.status == "infeasible"
    assert "attackers [1]" in tr.diagnostics[0]


def test_piecewise_segments_are_logged_and_continuous():
    tr = run_scenario(small_config(law="piecewise", segments=3, maneuver=example2().maneuver))
    assert tr.complete and len(tr.segments) == 3
    assert [s["t_start"] for s in tr.segments] == [0.0, 1.0, 2.0]
    steps = np.abs(np.diff(tr.R, axis=0))
    assert np.max(steps) <= 1.01 * np.max(np.abs(tr.V_r)) * 1e-2


def test_save_load_round_trip(tmp_path):
    tr = run_scenario(small_config(law="observed"))
    tr.save(tmp_path / "t.npz")
    back = SimTrace.load(tmp_path / "t.npz")
    assert back.config.to_dict() == tr.config.to_dict()
    assert back.hits == tr.hits and back.status == tr.status
    for f in dataclasses.fields(SimTrace):
        v = getattr(tr, f.name)
        if isinstance(v, np.ndarray):
            np.testing.assert_array_equal(getattr(back, f.name), v)


@pytest.mark.parametrize("changes, key", [
    (dict(speeds=[1.2, 0.7, 0.7, 0.7]), "attackers.speed_kmps"),
    (dict(graph=CommGraph(np.zeros((4, 4)))), "graph.weights"),
    (dict(dt=0.007), "time.dt_s"),
    (dict(tf=-1.0), "time.tf_s"),
    (dict(segments=7), "piecewise.segments"),
    (dict(observers=(7,)), "graph.observers"),
    (dict(Rf=[20.0] * 4), "attackers.Rf_km"),
    (dict(law="magic"), "law"),
    (dict(R0=[1.0, 2.0]), "attackers.lambda0_rad"),
])
def test_config_validation(changes, key):
    with pytest.raises(ConfigError) as err:
        example1(**changes)
    assert err.value.key == key


def test_observers_must_reach_everyone():
    A = np.zeros((4, 4))
    A[1:, 0] = 1.0  # attacker 1 is the only root
    with pytest.raises(ConfigError, match="does not reach"):
        example1(graph=CommGraph(A), observers=(1,))


def test_maneuver_profiles():
    m = TargetManeuver(kind="sinusoid", amplitude=0.1, omega=10.0)
    np.testing.assert_allclose(m.accel(0.3), 0.1 * np.sin(3.0))
    np.testing.assert_allclose(m.accel_rate(0.3), np.cos(3.0))
    e = TargetManeuver(kind="exponential", amplitude=0.1, s=-2.0)
    np.testing.assert_allclose(e.accel(1.0), 0.013533528323661269, rtol=1e-15)
    with pytest.raises(ConfigError):
        TargetManeuver(kind="zigzag")


def test_config_is_immutable():
    cfg = example1()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.tf = 3.0
    with pytest.raises(ValueError):
        cfg.R0[0] = 1.0
    assert isinstance(cfg, ScenarioConfig)
