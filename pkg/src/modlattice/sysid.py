"""Drag and thrust identification from lattice trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .lattice import AMP_MAX, AMP_MIN, ThrustCurve
from .sim import Trajectory

STEADY_WINDOW = 0.2
STEADY_TOL = 0.05
# Relative speed drop below which an impulse trial has nothing to fit.
MIN_DECAY = 0.01


class SysIdError(RuntimeError):
    pass


@dataclass(frozen=True)
class ImpulseTrial:
    times: tuple[float, ...]
    speeds: tuple[float, ...]
    axis: str
    inertia_term: float

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "speeds", tuple(float(v) for v in self.speeds))
        if self.axis not in ("linear", "yaw"):
            raise ValueError("axis must be 'linear' or 'yaw'")
        if len(self.times) != len(self.speeds) or len(self.times) < 10:
            raise ValueError("need at least 10 (time, speed) samples")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not self.speeds[0] > 0:
            raise ValueError("initial speed must be positive")
        if not self.inertia_term > 0:
            raise ValueError("inertia term must be positive")

    @classmethod
    def from_trajectory(cls, traj: Trajectory, axis: str, inertia_term: float,
                        t_start: float | None = None) -> "ImpulseTrial":
        """Coast-down samples from the peak speed (or ``t_start``) onwards."""
        speed = traj.v_surge if axis == "linear" else traj.yaw_rate
        k0 = int(np.argmax(np.abs(speed))) if t_start is None else int(np.searchsorted(traj.time, t_start))
        sign = 1.0 if speed[k0] >= 0 else -1.0
        return cls(tuple(traj.time[k0:]), tuple(sign * speed[k0:]), axis, inertia_term)


@dataclass(frozen=True)
class FitResult:
    coefficient: float
    residual_rms: float
    std: float
    initial_speed: float = 0.0


def quadratic_decay(t, c, v0, inertia, t0=0.0):
    """Coast-down speed under quadratic drag: v0 / (1 + c v0 (t - t0) / inertia)."""
    return v0 / (1.0 + c * v0 * (np.asarray(t) - t0) / inertia)


def fit_drag(trial: ImpulseTrial) -> FitResult:
    """Least-squares fit of (C, v0) to a coast-down using the closed-form decay."""
    t = np.asarray(trial.times)
    v = np.asarray(trial.speeds)
    t0 = t[0]
    if (v[0] - v.min()) / v[0] < MIN_DECAY:
        raise SysIdError("speed does not decay; nothing to fit")
    m = trial.inertia_term

    # Initial guess from 1/v being linear in time: 1/v = 1/v0 + (C/M) t.
    slope, intercept = np.polyfit(t - t0, 1.0 / np.clip(v, 1e-9, None), 1)
    c_guess = max(slope * m, 1e-6)
    v0_guess = 1.0 / intercept if intercept > 0 else v[0]
    # Work in scaled units so both parameters are O(1).
    c_scale, v_scale = c_guess, abs(v0_guess)

    def resid(p):
        return (quadratic_decay(t, p[0] * c_scale, p[1] * v_scale, m, t0) - v) / v_scale

    sol = least_squares(resid, [1.0, 1.0], bounds=([0.0, 0.0], [np.inf, np.inf]),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if not sol.success:
        raise SysIdError(f"drag fit did not converge: {sol.message}")
    c = float(sol.x[0] * c_scale)
    v0 = float(sol.x[1] * v_scale)
    if not c > 0:
        raise SysIdError("fit produced a non-positive drag coefficient")

    res = sol.fun * v_scale
    dof = max(1, len(t) - 2)
    sigma2 = float(res @ res) / dof
    jac = sol.jac * v_scale / np.array([c_scale, v_scale])
    try:
        cov = np.linalg.inv(jac.T @ jac) * sigma2
        std = float(math.sqrt(max(cov[0, 0], 0.0)))
    except np.linalg.LinAlgError:
        std = math.inf
    return FitResult(c, float(math.sqrt(np.mean(res ** 2))), std, v0)


def periodwise_velocity(traj: Trajectory, period: float) -> tuple[np.ndarray, np.ndarray]:
    """World-frame displacement over the trailing period divided by the period.

    Returns (times, velocities[n, 2]); samples earlier than one period are omitted.
    """
    t = traj.time
    keep = t >= t[0] + period - 1e-9
    if not keep.any():
        return np.empty(0), np.empty((0, 2))
    tk = t[keep]
    back = tk - period
    xb = np.interp(back, t, traj.x)
    yb = np.interp(back, t, traj.y)
    vel = np.stack([(traj.x[keep] - xb) / period, (traj.y[keep] - yb) / period], axis=1)
    return tk, vel


@dataclass(frozen=True)
class ThrustPoint:
    amplitude: float
    speed: float
    thrust: float
    steady: bool
    flag: str = ""


def steady_speed(traj: Trajectory, period: float) -> tuple[float, bool]:
    """Mean period-wise speed over the final window and whether it is steady."""
    _, vel = periodwise_velocity(traj, period)
    if len(vel) == 0:
        return 0.0, False
    speed = np.linalg.norm(vel, axis=1)
    tail = speed[int(len(speed) * (1 - STEADY_WINDOW)):]
    mean = float(np.mean(tail))
    if mean <= 1e-9:
        return 0.0, True
    return mean, float(np.ptp(tail)) / mean < STEADY_TOL


def calibrate_thrust(trials, drag_linear: float, period: float,
                     linear_range: tuple[float, float] = (AMP_MIN, AMP_MAX),
                     min_thrust: float = 1e-5) -> tuple[ThrustCurve, list[ThrustPoint]]:
    """Thrust-vs-amplitude from steady swimming, via thrust = C_L v^2.

    ``trials`` is a list of (amplitude, Trajectory). Non-steady runs are
    dropped; runs outside ``linear_range`` or with negligible thrust are kept
    in the point list but flagged and left out of the curve.
    """
    points = []
    for amp, traj in trials:
        v, steady = steady_speed(traj, period)
        thrust = drag_linear * v * v
        flag = ""
        if not steady:
            flag = "not steady"
        elif thrust < min_thrust:
            flag = "flippers inactive"
        elif not linear_range[0] - 1e-9 <= amp <= linear_range[1] + 1e-9:
            flag = "outside linear range"
        points.append(ThrustPoint(float(amp), v, thrust, steady, flag))

    good: dict[float, list[float]] = {}
    for p in points:
        if not p.flag:
            good.setdefault(p.amplitude, []).append(p.thrust)
    if len(good) < 2:
        raise SysIdError("fewer than two usable amplitudes")
    amps = sorted(good)
    thrusts = np.maximum.accumulate([float(np.mean(good[a])) for a in amps])
    return ThrustCurve(tuple(zip(amps, thrusts.tolist())), period), points
