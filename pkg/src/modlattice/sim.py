"""Planar lattice dynamics with cycle-averaged thrust.

State is the lattice COM pose in the world frame and its velocities in the
body frame. Body x is along the lattice (sway), body y is the surge axis,
so with zero yaw the lattice swims along world +y.

    m dv_surge/dt = sum f_i - C_L |v_surge| v_surge
    I dOmega/dt   = sum f_i x_i - C_R |Omega| Omega
    m dv_sway/dt  = F_sway - C_sway |v_sway| v_sway

Each cycle the per-boat thrust is held constant at its cycle average.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .control import LatticeController, Observation
from .guard import check_assumptions
from .lattice import LatticeConfig, aggregate
from .waveform import CycleSchedule, wrap_angle

STATE_COLUMNS = ("time_s", "x_m", "y_m", "yaw_rad", "v_surge_mps", "v_sway_mps",
                 "yaw_rate_radps")


class UnsafeScheduleError(RuntimeError):
    """The schedule fails the undocking guard; the simulator will not run it."""


class SimulationError(RuntimeError):
    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


@dataclass(frozen=True)
class LatticeState:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    v_surge: float = 0.0
    v_sway: float = 0.0
    yaw_rate: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (*self.as_vector(), self.time))):
            raise ValueError("non-finite lattice state")

    def as_vector(self) -> tuple[float, ...]:
        return (self.x, self.y, self.yaw, self.v_surge, self.v_sway, self.yaw_rate)

    @classmethod
    def from_vector(cls, vec, time: float) -> "LatticeState":
        x, y, yaw, u, v, r = (float(a) for a in vec)
        return cls(x, y, wrap_angle(yaw), u, v, r, time)

    def kinetic_energy(self, mass: float, inertia: float) -> float:
        return 0.5 * mass * (self.v_surge ** 2 + self.v_sway ** 2) + 0.5 * inertia * self.yaw_rate ** 2


@dataclass(frozen=True)
class DisturbanceSpec:
    switch_impulse_sway: float = 0.0
    switch_impulse_yaw: float = 0.0
    thrust_scale: float = 1.0
    impulse_jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.thrust_scale > 0:
            raise ValueError("thrust_scale must be positive")
        if self.impulse_jitter < 0:
            raise ValueError("impulse_jitter must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    step: float | None = None  # defaults to period / 100
    integrator: str = "rk4"
    disturbances: DisturbanceSpec = field(default_factory=DisturbanceSpec)

    def __post_init__(self):
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")

    def steps_per_cycle(self, period: float) -> int:
        step = period / 100 if self.step is None else self.step
        if not 0 < step <= period / 10 + 1e-12:
            raise ValueError("integration step must be in (0, T/10]")
        return max(10, int(round(period / step)))


@dataclass
class Trajectory:
    """Dense time series of lattice states and the per-boat commands in force.

    Row k holds the state at ``time[k]`` and the command applied from then on.
    """

    time: np.ndarray
    states: np.ndarray  # (n, 6): x, y, yaw, v_surge, v_sway, yaw_rate
    amplitudes: np.ndarray  # (n, N)
    centerlines: np.ndarray
    forces: np.ndarray

    def __len__(self):
        return len(self.time)

    @property
    def n_boats(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def x(self):
        return self.states[:, 0]

    @property
    def y(self):
        return self.states[:, 1]

    @property
    def yaw(self):
        return self.states[:, 2]

    @property
    def v_surge(self):
        return self.states[:, 3]

    @property
    def v_sway(self):
        return self.states[:, 4]

    @property
    def yaw_rate(self):
        return self.states[:, 5]

    @property
    def final_state(self) -> LatticeState:
        return LatticeState.from_vector(self.states[-1], float(self.time[-1]))

    @classmethod
    def concat(cls, parts: Iterable["Trajectory"]) -> "Trajectory":
        parts = list(parts)
        return cls(*(np.concatenate([getattr(p, name) for p in parts])
                     for name in ("time", "states", "amplitudes", "centerlines", "forces")))

    def columns(self) -> list[str]:
        cols = list(STATE_COLUMNS)
        for i in range(1, self.n_boats + 1):
            cols += [f"amp_rad_{i}", f"centerline_rad_{i}", f"force_N_{i}"]
        return cols

    def to_csv(self, fh=None) -> str | None:
        """Write CSV to an open text file, or return it as a string."""
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.columns())
        per_boat = np.stack([self.amplitudes, self.centerlines, self.forces], axis=-1)
        per_boat = per_boat.reshape(len(self), -1)
        for t, s, b in zip(self.time, self.states, per_boat):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in s] + [repr(float(v)) for v in b])
        return out.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, source) -> "Trajectory":
        """Read the CSV layout written by ``to_csv`` (path, file or string)."""
        if hasattr(source, "read"):
            text = source.read()
        elif isinstance(source, str) and "\n" in source:
            text = source
        else:
            with open(source) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if tuple(header[:7]) != STATE_COLUMNS:
            raise ValueError("not a lattice trajectory CSV")
        data = np.array(body, dtype=float).reshape(len(body), len(header))
        n = (len(header) - 7) // 3
        boats = data[:, 7:].reshape(len(body), n, 3)
        return cls(data[:, 0], data[:, 1:7], boats[:, :, 0], boats[:, :, 1], boats[:, :, 2])


def _rates(s, surge_force, torque, sway_force, m, inertia, c_l, c_r, c_s):
    _, _, yaw, u, v, r = s
    c, sn = math.cos(yaw), math.sin(yaw)
    return (
        c * v - sn * u,
        sn * v + c * u,
        r,
        (surge_force - c_l * abs(u) * u) / m,
        (sway_force - c_s * abs(v) * v) / m,
        (torque - c_r * abs(r) * r) / inertia,
    )


def derivatives(state: LatticeState, forces, config: LatticeConfig,
                sway_force: float = 0.0) -> np.ndarray:
    """Time derivative of (x, y, yaw, v_surge, v_sway, yaw_rate)."""
    forces = np.asarray(forces, dtype=float)
    if forces.shape != (config.n_boats,):
        raise ValueError(f"expected {config.n_boats} forces")
    agg = aggregate(config)
    surge = float(forces.sum())
    torque = float(forces @ np.asarray(config.positions_x))
    return np.array(_rates(state.as_vector(), surge, torque, sway_force, agg.total_mass,
                           agg.total_inertia, config.drag_linear, config.drag_yaw,
                           config.drag_sway))


def _integrate(s, h, n, args, method, record=None):
    """Advance state tuple s by n fixed steps; optionally record each pre-step state."""
    for _ in range(n):
        if record is not None:
            record.append(s)
        if method == "rk4":
            k1 = _rates(s, *args)
            k2 = _rates(tuple(a + 0.5 * h * b for a, b in zip(s, k1)), *args)
            k3 = _rates(tuple(a + 0.5 * h * b for a, b in zip(s, k2)), *args)
            k4 = _rates(tuple(a + h * b for a, b in zip(s, k3)), *args)
            s = tuple(a + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
                      for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
        else:
            k1 = _rates(s, *args)
            s = tuple(a + h * b for a, b in zip(s, k1))
    return s


def propagate(state: LatticeState, forces, config: LatticeConfig, duration: float,
              step: float, integrator: str = "rk4") -> LatticeState:
    """Hold ``forces`` constant for ``duration`` seconds; no recording."""
    agg = aggregate(config)
    forces = np.asarray(forces, dtype=float)
    args = (float(forces.sum()), float(forces @ np.asarray(config.positions_x)), 0.0,
            agg.total_mass, agg.total_inertia, config.drag_linear, config.drag_yaw,
            config.drag_sway)
    n = max(1, int(round(duration / step)))
    s = _integrate(state.as_vector(), duration / n, n, args, integrator)
    return LatticeState.from_vector(s, state.time + duration)


def schedule_forces(schedule: CycleSchedule, config: LatticeConfig,
                    thrust_scale: float = 1.0) -> np.ndarray:
    """Cycle-averaged thrust each boat produces under ``schedule``."""
    return np.array([
        math.cos(c.centerline) * boat.thrust_curve.thrust(c.amplitude) * thrust_scale
        for c, boat in zip(schedule.commands, config.boats)
    ])


def step_cycle(state: LatticeState, schedule: CycleSchedule, config: LatticeConfig,
               simcfg: SimConfig | None = None, previous: CycleSchedule | None = None,
               rng: np.random.Generator | None = None) -> tuple[LatticeState, Trajectory]:
    """Simulate one full period of ``schedule``.

    Returns the end state and the segment sampled at every integrator step,
    start included and end excluded. Centerline switches relative to
    ``previous`` deliver the configured sway/yaw impulses at cycle start.
    """
    simcfg = simcfg or SimConfig()
    verdict = check_assumptions(schedule)
    if not verdict.safe:
        raise UnsafeScheduleError(verdict.reason)
    if len(schedule) != config.n_boats:
        raise ValueError("schedule and lattice sizes differ")

    agg = aggregate(config)
    dist = simcfg.disturbances
    vec = list(state.as_vector())
    if previous is not None and (dist.switch_impulse_sway or dist.switch_impulse_yaw):
        for old, new in zip(previous.commands, schedule.commands):
            if old.centerline == new.centerline:
                continue
            sign = 1.0 if new.centerline != 0.0 else -1.0
            scale = 1.0
            if dist.impulse_jitter and rng is not None:
                scale += dist.impulse_jitter * rng.standard_normal()
            vec[4] += sign * scale * dist.switch_impulse_sway / agg.total_mass
            vec[5] += sign * scale * dist.switch_impulse_yaw / agg.total_inertia

    forces = schedule_forces(schedule, config, dist.thrust_scale)
    args = (float(forces.sum()), float(forces @ np.asarray(config.positions_x)), 0.0,
            agg.total_mass, agg.total_inertia, config.drag_linear, config.drag_yaw,
            config.drag_sway)
    period = schedule.period
    n = simcfg.steps_per_cycle(period)
    record: list = []
    end = _integrate(tuple(vec), period / n, n, args, simcfg.integrator, record)

    states = np.array(record)
    states[:, 2] = wrap_angle(states[:, 2])
    times = state.time + period * np.arange(n) / n
    seg = Trajectory(
        times, states,
        np.tile(schedule.amplitudes, (n, 1)),
        np.tile(schedule.centerlines, (n, 1)),
        np.tile(forces, (n, 1)),
    )
    return LatticeState.from_vector(end, state.time + period), seg


def _surge_axis(yaw: float) -> tuple[float, float]:
    return (-math.sin(yaw), math.cos(yaw))


def observe(state: LatticeState, cycle_start_pos: tuple[float, float] | None,
            period: float) -> Observation:
    """Period-wise surge velocity, falling back to the instantaneous one."""
    if cycle_start_pos is None:
        v_obs = state.v_surge
    else:
        ax, ay = _surge_axis(state.yaw)
        v_obs = ((state.x - cycle_start_pos[0]) * ax + (state.y - cycle_start_pos[1]) * ay) / period
    return Observation(v_obs, state.yaw, state.yaw_rate, state.time)


def run(initial: LatticeState, controller: LatticeController, config: LatticeConfig,
        simcfg: SimConfig | None = None, duration: float = 45.0) -> Trajectory:
    """Closed loop: one control decision, then one simulated cycle, repeated."""
    simcfg = simcfg or SimConfig()
    period = controller.period
    cycles = int(round(duration / period))
    if cycles < 1 or abs(cycles * period - duration) > 1e-9 * max(1.0, duration):
        raise ValueError(f"duration {duration} is not a whole number of {period:g} s cycles")
    rng = np.random.default_rng(simcfg.disturbances.seed)

    state = replace(initial, time=0.0) if initial.time != 0.0 else initial
    parts: list[Trajectory] = []
    prev_schedule = None
    start_pos = None
    try:
        for c in range(cycles):
            schedule, _ = controller.step(observe(state, start_pos, period))
            start_pos = (state.x, state.y)
            state, seg = step_cycle(state, schedule, config, simcfg, prev_schedule, rng)
            # cycle boundaries on an exact grid, free of accumulated rounding
            state = replace(state, time=(c + 1) * period)
            parts.append(seg)
            prev_schedule = schedule
    except Exception as exc:
        partial = Trajectory.concat(parts) if parts else None
        raise SimulationError(f"closed loop failed at t={state.time:.3f}s: {exc}", partial) from exc

    last = parts[-1]
    tail = Trajectory(
        np.array([state.time]), np.array([state.as_vector()]),
        last.amplitudes[-1:], last.centerlines[-1:], last.forces[-1:])
    return Trajectory.concat(parts + [tail])


def run_open_loop(schedule: CycleSchedule, config: LatticeConfig, duration: float,
                  initial: LatticeState | None = None,
                  simcfg: SimConfig | None = None) -> Trajectory:
    """Repeat one schedule for ``duration`` seconds (whole cycles)."""
    simcfg = simcfg or SimConfig()
    state = initial or LatticeState()
    period = schedule.period
    cycles = max(1, int(round(duration / period)))
    parts = []
    t0 = state.time
    for c in range(cycles):
        state, seg = step_cycle(state, schedule, config, simcfg)
        state = replace(state, time=t0 + (c + 1) * period)
        parts.append(seg)
    last = parts[-1]
    tail = Trajectory(np.array([state.time]), np.array([state.as_vector()]),
                      last.amplitudes[-1:], last.centerlines[-1:], last.forces[-1:])
    return Trajectory.concat(parts + [tail])
