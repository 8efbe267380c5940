"""Acceptance criteria, one test per criterion.

Each check records a one-line verdict that conftest prints in the terminal
summary. Run directly (``python tests/test_acceptance.py``) for the same lines
without pytest.
"""
import itertools
import math
import time

import numpy as np
import pytest

from modlattice.control import distribute
from modlattice.guard import geometric_clearance, sign_invariant
from modlattice.harness import ExperimentSpec, run_experiment
from modlattice.lattice import BoatParams, LatticeConfig, aggregate, reference_params, structural_matrix
from modlattice.sim import DisturbanceSpec, LatticeState, propagate, run_open_loop
from modlattice.sysid import ImpulseTrial, fit_drag
from modlattice.waveform import CycleSchedule, WaveformCommand

T = 1.5
W = 2 * math.pi / T
RESULTS: dict[str, tuple[bool, str]] = {}


def record(name: str, ok: bool, detail: str) -> None:
    RESULTS[name] = (bool(ok), detail)
    assert ok, f"{name}: {detail}"


def _schedule(centers, amps, phases=None):
    phases = phases or [0.0] * len(centers)
    return CycleSchedule(tuple(WaveformCommand(c, a, W, 0, p) for c, a, p in zip(centers, amps, phases)))


def test_ac1_static_check_exhaustive():
    t0 = time.perf_counter()
    amps = np.linspace(0.0, 2.75, 5)
    cases = unsafe = 0
    for n in (2, 3, 4):
        for centers in itertools.product([0.0, math.pi], repeat=n):
            for a in itertools.product(amps, repeat=n):
                s = _schedule(list(centers), list(a))
                cases += 1
                if not (sign_invariant(s, 64).safe and geometric_clearance(s, samples=64).safe):
                    unsafe += 1
    flipped = 0
    for n in (2, 3, 4):
        phases = [0.0] * n
        phases[1] = math.pi  # T/2 offset on one boat
        s = _schedule([0.0] * n, [2.75] * n, phases)
        flipped += (not sign_invariant(s, 64).safe) and (not geometric_clearance(s, samples=64).safe)
    elapsed = time.perf_counter() - t0
    ok = unsafe == 0 and flipped == 3 and elapsed < 60.0
    record("AC1", ok, f"{cases} schedules, {unsafe} unsafe; T/2 offset flips {flipped}/3; {elapsed:.1f} s")


def _random_config(rng):
    n = int(rng.integers(2, 7))
    boats = [BoatParams(mass=float(m)) for m in rng.uniform(0.2, 2.0, n)]
    offsets = np.concatenate([[0.0], np.cumsum(rng.uniform(0.16, 0.4, n - 1))])
    return LatticeConfig.from_boats(boats, offsets, 7.0, 0.03)


def test_ac2_min_norm_allocation():
    rng = np.random.default_rng(1234)
    worst_f = worst_p = 0.0
    for _ in range(1000):
        cfg = _random_config(rng)
        target = np.array([rng.uniform(-0.1, 0.1), rng.uniform(-0.02, 0.02)])
        P = structural_matrix(cfg)
        f = distribute(cfg, target)
        n = P.shape[1]
        kkt = np.block([[np.eye(n), P.T], [P, np.zeros((2, 2))]])
        oracle = np.linalg.solve(kkt, np.concatenate([np.zeros(n), target]))[:n]
        worst_f = max(worst_f, float(np.max(np.abs(f - oracle))))
        worst_p = max(worst_p, float(np.max(np.abs(P @ f - target))))
    record("AC2", worst_f <= 1e-9 and worst_p <= 1e-10,
           f"max |f - oracle| = {worst_f:.2e}, max |P f - target| = {worst_p:.2e}")


def _decays(noise, rng=None):
    cfg = reference_params(3)
    agg = aggregate(cfg)
    zero = _schedule([0.0] * 3, [0.0] * 3)
    out = {}
    for axis, init, inertia, truth in (
            ("linear", LatticeState(v_surge=0.1), agg.total_mass, cfg.drag_linear),
            ("yaw", LatticeState(yaw_rate=1.0), agg.total_inertia, cfg.drag_yaw)):
        traj = run_open_loop(zero, cfg, 30.0, init)
        trial = ImpulseTrial.from_trajectory(traj, axis, inertia)
        speeds = np.array(trial.speeds)[::10]
        times = np.array(trial.times)[::10]
        if noise:
            speeds = speeds + noise * speeds[0] * rng.standard_normal(len(speeds))
        fit = fit_drag(ImpulseTrial(tuple(times), tuple(speeds), axis, inertia))
        out[axis] = abs(fit.coefficient - truth) / truth
    return out


def test_ac3_drag_fit_round_trip():
    clean = _decays(0.0)
    rng = np.random.default_rng(99)
    noisy = [_decays(0.01, rng) for _ in range(50)]
    med = {k: float(np.median([abs(d[k]) for d in noisy])) for k in ("linear", "yaw")}
    ok = max(clean.values()) < 0.01 and max(med.values()) < 0.05
    record("AC3", ok, f"noiseless C_L {clean['linear']:.1e}, C_R {clean['yaw']:.1e}; "
                      f"noisy median C_L {med['linear']:.2%}, C_R {med['yaw']:.2%}")


def test_ac4_thrust_drag_balance():
    traj, _ = run_experiment(ExperimentSpec("vel_step", 3, 0.06))
    v = traj.v_surge[-1]
    total = traj.forces[-1].sum()
    balance = abs(total - 7.0 * v * v) / (7.0 * v * v)
    reach = {}
    for sp in (0.03, 0.08):
        _, rep = run_experiment(ExperimentSpec("vel_step", 3, sp))
        reach[sp] = abs(rep.final_error) / sp
    ok = balance < 0.02 and all(e < 0.02 for e in reach.values())
    record("AC4", ok, f"force/drag mismatch {balance:.2e} at v={v:.4f}; final error "
                      f"{reach[0.03]:.1%} at 3 cm/s, {reach[0.08]:.1%} at 8 cm/s")


def test_ac5_performance_envelopes():
    vel = {n: run_experiment(ExperimentSpec("vel_step", n, 0.06))[1] for n in range(2, 6)}
    yaw = {n: run_experiment(ExperimentSpec("yaw_step", n, math.pi / 2))[1] for n in range(2, 6)}
    vel_ok = all(4.5 <= r.rise_time <= 8.0 and r.settled for r in vel.values())
    yaw_ok = all(3.7 * 0.5 <= r.rise_time <= 5.0 * 1.5 and r.settled for r in yaw.values())
    rms_ok = all(r.rms_error_post_rise <= 0.0042 for r in vel.values())
    detail = ("v rise " + "/".join(f"{vel[n].rise_time:.2f}" for n in vel) +
              " s; yaw rise " + "/".join(f"{yaw[n].rise_time:.2f}" for n in yaw) +
              " s; max v RMS " + f"{max(r.rms_error_post_rise for r in vel.values()):.2e} m/s")
    record("AC5", vel_ok and yaw_ok and rms_ok, detail)


def test_ac6_mismatch_robustness():
    _, matched = run_experiment(ExperimentSpec("vel_step", 5, 0.06))
    _, vel = run_experiment(ExperimentSpec("mismatch", 5, 0.06, assumed_drag_n=2))
    _, yaw = run_experiment(ExperimentSpec("mismatch", 5, math.pi / 2, assumed_drag_n=2,
                                           mismatch_of="yaw_step"))
    ok = (vel.settled and vel.rise_time > matched.rise_time and abs(vel.final_error) <= 0.0042
          and yaw.settled and abs(yaw.final_error) < 0.05)
    record("AC6", ok, f"v rise {vel.rise_time:.1f} s vs matched {matched.rise_time:.1f} s, "
                      f"final v error {vel.final_error:.1e} m/s; yaw final error {yaw.final_error:.1e} rad")


def test_ac7_integrator():
    cfg = reference_params(3)
    agg = aggregate(cfg)
    zero = _schedule([0.0] * 3, [0.0] * 3)
    lin = run_open_loop(zero, cfg, 30.0, LatticeState(v_surge=0.1))
    exact = 0.1 / (1 + cfg.drag_linear * 0.1 / agg.total_mass * lin.time)
    err_lin = float(np.max(np.abs(lin.v_surge - exact) / exact))
    yaw = run_open_loop(zero, cfg, 30.0, LatticeState(yaw_rate=1.0))
    exact = 1.0 / (1 + cfg.drag_yaw / agg.total_inertia * yaw.time)
    err_yaw = float(np.max(np.abs(yaw.yaw_rate - exact) / exact))

    w_end = 1.0 / (1 + cfg.drag_yaw / agg.total_inertia * 6.0)
    errs = [abs(propagate(LatticeState(yaw_rate=1.0), [0.0] * 3, cfg, 6.0, h).yaw_rate - w_end)
            for h in (0.4, 0.2, 0.1, 0.05)]
    order = float(min(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
    ok = err_lin < 1e-3 and err_yaw < 1e-3 and order >= 3.5
    record("AC7", ok, f"max decay error {err_lin:.1e} (linear), {err_yaw:.1e} (yaw); RK4 order {order:.2f}")


def test_ac8_determinism():
    dist = DisturbanceSpec(switch_impulse_sway=2e-3, switch_impulse_yaw=2e-4, impulse_jitter=0.5)
    spec = ExperimentSpec("combined_turn", 3, 0.04, seed=17, disturbances=dist)
    a = run_experiment(spec)[0].to_csv().encode()
    b = run_experiment(spec)[0].to_csv().encode()
    record("AC8", a == b, f"{len(a)} bytes, identical={a == b}")


if __name__ == "__main__":
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_ac")):
        try:
            fn()
        except AssertionError:
            pass
    for key in sorted(RESULTS):
        ok, detail = RESULTS[key]
        print(f"{key} {'PASS' if ok else 'FAIL'}: {detail}")
