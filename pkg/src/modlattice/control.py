"""Surge-velocity and yaw control with pseudoinverse force allocation.

Once per oscillation cycle the controller

1. integrates an artificial surge acceleration into a commanded velocity,
2. computes a yaw angular acceleration from a PD law,
3. turns both into a net surge force and yaw torque using the lattice's
   drag model, and
4. spreads that wrench over the boats with the minimum-norm solution
   ``f = P^T (P P^T)^-1 [F, tau]``, which is linear in each boat's offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lattice import ConfigError, LatticeConfig, ThrustCurve, aggregate, structural_matrix
from .waveform import DEFAULT_OMEGA, CycleSchedule, schedule_cycle, wrap_angle


@dataclass(frozen=True)
class ControllerGains:
    kp_v: float = 0.0
    kd_v: float = 0.0
    kp_yaw: float = 0.0
    kd_yaw: float = 0.0

    def __post_init__(self):
        if min(self.kp_v, self.kd_v, self.kp_yaw, self.kd_yaw) < 0:
            raise ValueError("gains must be non-negative")


@dataclass(frozen=True)
class Setpoint:
    v_desired: float = 0.0
    yaw_desired: float | None = None

    @property
    def yaw_enabled(self) -> bool:
        return self.yaw_desired is not None


@dataclass(frozen=True)
class Observation:
    v_observed: float
    yaw_observed: float
    yaw_rate: float
    timestamp: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.v_observed, self.yaw_observed,
                                       self.yaw_rate, self.timestamp))):
            raise ValueError("non-finite observation")


@dataclass(frozen=True)
class ControllerState:
    v_command: float = 0.0
    prev_err_v: float | None = None
    prev_err_yaw: float | None = None
    last_update: float | None = None
    cycle: int = 0

    @classmethod
    def activate(cls, sp: Setpoint) -> "ControllerState":
        return cls(v_command=sp.v_desired)


def velocity_loop(gains: ControllerGains, state: ControllerState, sp: Setpoint,
                  obs: Observation, dt: float) -> tuple[float, ControllerState]:
    """One forward-Euler step of the commanded-velocity integrator."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    err = sp.v_desired - obs.v_observed
    derr = 0.0 if state.prev_err_v is None else (err - state.prev_err_v) / dt
    accel = gains.kp_v * err + gains.kd_v * derr
    v_c = state.v_command + accel * dt
    return v_c, replace(state, v_command=v_c, prev_err_v=err, last_update=obs.timestamp)


def yaw_loop(gains: ControllerGains, sp: Setpoint, obs: Observation) -> float:
    """PD on the wrapped heading error; the derivative acts on the measured rate."""
    if not sp.yaw_enabled:
        return 0.0
    err = wrap_angle(sp.yaw_desired - obs.yaw_observed)
    return gains.kp_yaw * err - gains.kd_yaw * obs.yaw_rate


def wrench(config: LatticeConfig, v_c: float, alpha: float, omega: float) -> np.ndarray:
    """Net surge force and yaw torque needed for (v_c, alpha) at yaw rate omega."""
    inertia = aggregate(config).total_inertia
    return np.array([
        config.drag_linear * abs(v_c) * v_c,
        inertia * alpha + config.drag_yaw * abs(omega) * omega,
    ])


def pseudoinverse(P: np.ndarray) -> np.ndarray:
    gram = P @ P.T
    if abs(np.linalg.det(gram)) < 1e-14 * max(1.0, np.abs(gram).max()) ** 2:
        raise ConfigError("structural matrix is rank deficient (coincident boats)")
    return P.T @ np.linalg.inv(gram)


def distribute(config: LatticeConfig, target: np.ndarray) -> np.ndarray:
    """Minimum-norm forces with P f = target, before any saturation."""
    return pseudoinverse(structural_matrix(config)) @ np.asarray(target, dtype=float)


def allocate(config: LatticeConfig, v_c: float, alpha: float, omega: float,
             clamp: bool = True) -> np.ndarray:
    forces = distribute(config, wrench(config, v_c, alpha, omega))
    if clamp:
        f_max = np.array([b.f_max for b in config.boats])
        forces = np.clip(forces, -f_max, f_max)
    return forces


def invert_thrust(curve: ThrustCurve, f: float, amp_min: float | None = None,
                  amp_max: float | None = None) -> float:
    """Amplitude producing thrust ``f`` on the activated part of the curve.

    Forces below the activation thrust snap to 0 or ``amp_min`` (whichever
    is nearer); forces above the thrust at ``amp_max`` saturate.
    """
    if f < 0:
        raise ValueError("thrust magnitude must be non-negative")
    amp_min = curve.samples[0][0] if amp_min is None else amp_min
    amp_max = curve.samples[-1][0] if amp_max is None else amp_max
    f_lo = curve.thrust(amp_min)
    f_hi = curve.thrust(amp_max)
    if f < f_lo:
        return 0.0 if f < 0.5 * f_lo else amp_min
    if f >= f_hi:
        return amp_max
    amps = curve.amplitudes
    inside = (amps > amp_min) & (amps < amp_max)
    xs = np.concatenate([[amp_min], amps[inside], [amp_max]])
    ys = np.array([curve.thrust(a) for a in xs])
    # first segment whose upper thrust reaches f; flat segments resolve low
    k = int(np.searchsorted(ys, f, side="left"))
    k = min(max(k, 1), len(xs) - 1)
    y0, y1 = ys[k - 1], ys[k]
    if y1 == y0:
        return float(xs[k - 1])
    return float(xs[k - 1] + (f - y0) * (xs[k] - xs[k - 1]) / (y1 - y0))


def control_step(config: LatticeConfig, gains: ControllerGains, state: ControllerState,
                 sp: Setpoint, obs: Observation, dt: float,
                 omega: float = DEFAULT_OMEGA) -> tuple[CycleSchedule, ControllerState, np.ndarray]:
    """Decide one cycle: returns the schedule, new state and the clamped forces."""
    v_c, state = velocity_loop(gains, state, sp, obs, dt)
    alpha = yaw_loop(gains, sp, obs)
    forces = allocate(config, v_c, alpha, obs.yaw_rate)
    err_yaw = wrap_angle(sp.yaw_desired - obs.yaw_observed) if sp.yaw_enabled else None
    state = replace(state, prev_err_yaw=err_yaw, cycle=state.cycle + 1)
    schedule = schedule_cycle(forces, config, omega, k=state.cycle - 1,
                              cycle_start=obs.timestamp)
    return schedule, state, forces


class LatticeController:
    """Stateful wrapper used by the closed-loop simulator.

    ``model`` is the controller's belief about the lattice; it may carry
    different drag coefficients from the simulated plant. ``setpoints`` is a
    list of ``(start_time, Setpoint)`` pairs sorted by time.
    """

    def __init__(self, model: LatticeConfig, gains: ControllerGains,
                 setpoints, omega: float = DEFAULT_OMEGA):
        if isinstance(setpoints, Setpoint):
            setpoints = [(0.0, setpoints)]
        self.model = model
        self.gains = gains
        self.setpoints = sorted(setpoints, key=lambda p: p[0])
        self.omega = omega
        self.state: ControllerState | None = None

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def setpoint_at(self, t: float) -> Setpoint:
        current = self.setpoints[0][1]
        for start, sp in self.setpoints:
            if t + 1e-9 >= start:
                current = sp
        return current

    def step(self, obs: Observation) -> tuple[CycleSchedule, np.ndarray]:
        sp = self.setpoint_at(obs.timestamp)
        if self.state is None:
            self.state = ControllerState.activate(sp)
        schedule, self.state, forces = control_step(
            self.model, self.gains, self.state, sp, obs, self.period, self.omega)
        return schedule, forces
