import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modlattice.lattice import ThrustCurve, aggregate, reference_params
from modlattice.sim import LatticeState, Trajectory, run_open_loop
from modlattice.sysid import (ImpulseTrial, SysIdError, calibrate_thrust, fit_drag,
                              periodwise_velocity, quadratic_decay, steady_speed)
from modlattice.waveform import CycleSchedule, WaveformCommand

T = 1.5
W = 2 * math.pi / T


def synthetic(c=7.0, m=1.98, v0=0.1, n=200, horizon=20.0, noise=0.0, rng=None):
    t = np.linspace(0.0, horizon, n)
    v = quadratic_decay(t, c, v0, m)
    if noise:
        v = v + noise * v0 * rng.standard_normal(n)
    return ImpulseTrial(tuple(t), tuple(v), "linear", m)


def make_traj(t, x, y, n_boats=1):
    n = len(t)
    states = np.zeros((n, 6))
    states[:, 0], states[:, 1] = x, y
    z = np.zeros((n, n_boats))
    return Trajectory(np.asarray(t, float), states, z, z, z)


def test_periodwise_velocity_examples():
    t = np.linspace(0, 6, 401)
    _, v = periodwise_velocity(make_traj(t, 0 * t, 0 * t), T)
    assert np.all(v == 0)
    tk, v = periodwise_velocity(make_traj(t, 0.01 * t, 0.03 * t), T)
    assert tk[0] == pytest.approx(T)
    np.testing.assert_allclose(v, np.tile([0.01, 0.03], (len(v), 1)), atol=1e-12)
    _, v = periodwise_velocity(make_traj(t, 0.02 * np.sin(W * t), 0 * t), T)
    np.testing.assert_allclose(v, 0.0, atol=1e-12)
    short = make_traj(np.linspace(0, 1, 10), np.zeros(10), np.zeros(10))
    assert len(periodwise_velocity(short, T)[0]) == 0


def test_fit_noiseless():
    res = fit_drag(synthetic())
    assert res.coefficient == pytest.approx(7.0, abs=1e-6)
    assert res.initial_speed == pytest.approx(0.1, rel=1e-9)
    assert res.residual_rms < 1e-10


def test_fit_noisy_monte_carlo():
    rng = np.random.default_rng(11)
    fits = [fit_drag(synthetic(noise=0.01, rng=rng)) for _ in range(50)]
    coef = np.array([f.coefficient for f in fits])
    assert abs(coef.mean() - 7.0) / 7.0 < 0.02
    assert all(f.std > 0 for f in fits)
    # reported std is the right order of magnitude
    assert 0.3 < np.mean([f.std for f in fits]) / coef.std() < 3.0


def test_fit_constant_velocity_rejected():
    with pytest.raises(SysIdError):
        fit_drag(ImpulseTrial(tuple(range(20)), (0.05,) * 20, "linear", 1.0))


def test_trial_validation():
    with pytest.raises(ValueError):
        ImpulseTrial((0, 1, 2), (1, 0.9, 0.8), "linear", 1.0)
    with pytest.raises(ValueError):
        ImpulseTrial(tuple(range(10)), (0.0,) * 10, "linear", 1.0)
    with pytest.raises(ValueError):
        ImpulseTrial(tuple(range(10)), (1.0,) * 10, "roll", 1.0)
    with pytest.raises(ValueError):
        ImpulseTrial((0, 2, 1) + tuple(range(3, 10)), (1.0,) * 10, "linear", 1.0)


@given(st.floats(0.1, 10.0))
@settings(max_examples=30, deadline=None)
def test_fit_scale_consistency(s):
    base = synthetic()
    scaled = ImpulseTrial(base.times, tuple(s * v for v in base.speeds), "linear", base.inertia_term)
    assert fit_drag(scaled).coefficient == pytest.approx(fit_drag(base).coefficient / s, rel=1e-6)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_round_trip_through_simulator(n):
    cfg = reference_params(n)
    agg = aggregate(cfg)
    zero = CycleSchedule(tuple(WaveformCommand(0.0, 0.0, W) for _ in range(n)))
    lin = run_open_loop(zero, cfg, 30.0, LatticeState(v_surge=0.1))
    res = fit_drag(ImpulseTrial.from_trajectory(lin, "linear", agg.total_mass))
    assert res.coefficient == pytest.approx(cfg.drag_linear, rel=0.01)
    yaw = run_open_loop(zero, cfg, 30.0, LatticeState(yaw_rate=1.0))
    res = fit_drag(ImpulseTrial.from_trajectory(yaw, "yaw", agg.total_inertia))
    assert res.coefficient == pytest.approx(cfg.drag_yaw, rel=0.01)


TRUTH = ThrustCurve(((0.75, 0.002), (2.75, 0.03)))


def centre_boat_trial(amp, curve=TRUTH, duration=60.0):
    """Three-boat lattice with only the middle boat (on the COM) swimming."""
    cfg = reference_params(3, thrust_curve=curve)
    cmds = tuple(WaveformCommand(0.0, a, W) for a in (0.0, amp, 0.0))
    return run_open_loop(CycleSchedule(cmds), cfg, duration)


def test_calibration_recovers_linear_curve():
    amps = np.linspace(0.75, 2.75, 5)
    trials = [(a, centre_boat_trial(a)) for a in amps]
    curve, points = calibrate_thrust(trials, 7.0, T)
    assert all(p.flag == "" for p in points)
    for a in amps:
        assert curve.thrust(a) == pytest.approx(TRUTH.thrust(a), rel=0.02)
    assert np.all(np.diff(curve.thrusts) >= 0)


def test_calibration_flags_and_duplicates():
    trials = [(0.5, centre_boat_trial(0.5)), (1.5, centre_boat_trial(1.5)),
              (1.5, centre_boat_trial(1.5)), (2.5, centre_boat_trial(2.5)),
              (1.0, centre_boat_trial(1.0, duration=3.0))]
    curve, points = calibrate_thrust(trials, 7.0, T)
    assert points[0].flag == "flippers inactive" and points[0].thrust == pytest.approx(0.0, abs=1e-12)
    assert points[4].flag == "not steady"
    assert [a for a, _ in curve.samples] == [1.5, 2.5]
    with pytest.raises(SysIdError):
        calibrate_thrust(trials[:2], 7.0, T)


def test_calibration_monotone_under_noise():
    rng = np.random.default_rng(5)
    amps = np.linspace(0.75, 2.75, 9)
    base = {a: centre_boat_trial(a) for a in amps}
    trials = []
    for a, traj in base.items():
        states = traj.states.copy()
        states[:, 1] *= 1 + 0.002 * rng.standard_normal()
        trials.append((a, Trajectory(traj.time, states, traj.amplitudes, traj.centerlines, traj.forces)))
    curve, _ = calibrate_thrust(trials, 7.0, T)
    assert np.all(np.diff(curve.thrusts) >= 0)


def test_steady_speed_detects_transient():
    _, steady = steady_speed(centre_boat_trial(2.0, duration=60.0), T)
    assert steady
    _, steady = steady_speed(centre_boat_trial(2.0, duration=4.5), T)
    assert not steady
