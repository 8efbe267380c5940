"""Per-cycle tail waveforms.

Each boat runs ``phi(t) = phi0 + A cos(w t + phase) cos(phi0)`` for one full
period, with ``phi0`` restricted to 0 (forward) or pi (reverse). Flipping the
oscillation sign with the centerline keeps the waveform as continuous as the
centerline switch allows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import CALIBRATION_PERIOD, LatticeConfig

FORWARD = 0.0
REVERSE = math.pi
DEFAULT_OMEGA = 2.0 * math.pi / CALIBRATION_PERIOD

# |f| > f_max by more than this is a caller error, not rounding.
FORCE_TOL = 1e-12


def wrap_angle(angle):
    """Wrap to (-pi, pi]. Works on scalars and arrays."""
    wrapped = math.pi - np.mod(math.pi - np.asarray(angle, dtype=float), 2.0 * math.pi)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


@dataclass(frozen=True)
class WaveformCommand:
    centerline: float
    amplitude: float
    angular_frequency: float = DEFAULT_OMEGA
    cycle_index: int = 0
    # Phase offset in radians. Always zero for commands this package emits;
    # it exists so the guard can be exercised on out-of-phase schedules.
    phase: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.centerline) and math.isfinite(self.amplitude)):
            raise ValueError("non-finite waveform parameter")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if not self.angular_frequency > 0:
            raise ValueError("angular frequency must be positive")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.angular_frequency

    @property
    def direction(self) -> float:
        """cos(centerline): +1 forward, -1 reverse."""
        return math.cos(self.centerline)


@dataclass(frozen=True)
class CycleSchedule:
    commands: tuple[WaveformCommand, ...]
    cycle_start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "commands", tuple(self.commands))
        if not self.commands:
            raise ValueError("empty schedule")

    @property
    def period(self) -> float:
        return self.commands[0].period

    @property
    def omega(self) -> float:
        return self.commands[0].angular_frequency

    @property
    def amplitudes(self) -> list[float]:
        return [c.amplitude for c in self.commands]

    @property
    def centerlines(self) -> list[float]:
        return [c.centerline for c in self.commands]

    def __len__(self):
        return len(self.commands)


def tail_deviation(cmd: WaveformCommand, t):
    """Unwrapped offset of the motor angle from its centerline."""
    t = np.asarray(t, dtype=float)
    dev = cmd.amplitude * np.cos(cmd.angular_frequency * t + cmd.phase) * math.cos(cmd.centerline)
    return float(dev) if dev.ndim == 0 else dev


def motor_angle(cmd: WaveformCommand, t, wrap: bool = True):
    """Motor angle at time ``t`` into the cycle, wrapped to (-pi, pi] by default."""
    angle = cmd.centerline + tail_deviation(cmd, t)
    return wrap_angle(angle) if wrap else angle


def discontinuity(prev: WaveformCommand, nxt: WaveformCommand) -> float:
    """Angular jump of the motor between the end of ``prev`` and start of ``nxt``."""
    end = motor_angle(prev, prev.period, wrap=False)
    start = motor_angle(nxt, 0.0, wrap=False)
    return abs(wrap_angle(start - end))


def schedule_cycle(forces: Sequence[float], config: LatticeConfig,
                   omega: float | Sequence[float] = DEFAULT_OMEGA,
                   k: int = 0, cycle_start: float = 0.0) -> CycleSchedule:
    """Turn desired per-boat forces into one phase-locked cycle of commands.

    The sign of each force picks the centerline, the magnitude picks the
    amplitude through the boat's thrust curve.
    """
    from .control import invert_thrust

    omegas = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omegas != omegas[0]):
        raise ValueError("all boats must share one angular frequency per cycle")
    w = float(omegas[0])
    if len(forces) != config.n_boats:
        raise ValueError(f"expected {config.n_boats} forces, got {len(forces)}")

    commands = []
    for f, boat in zip(forces, config.boats):
        f = float(f)
        if abs(f) > boat.f_max + FORCE_TOL:
            raise ValueError(f"force {f:.4g} N exceeds f_max {boat.f_max:.4g} N")
        centerline = FORWARD if f >= 0 else REVERSE
        amp = invert_thrust(boat.thrust_curve, abs(f), boat.amp_min, boat.amp_max)
        commands.append(WaveformCommand(centerline, amp, w, k))
    return CycleSchedule(tuple(commands), cycle_start)


def schedule_to_dict(schedule: CycleSchedule) -> dict:
    return {
        "cycle_start": schedule.cycle_start,
        "commands": [
            {"centerline": c.centerline, "amplitude": c.amplitude,
             "angular_frequency": c.angular_frequency, "cycle_index": c.cycle_index,
             "phase": c.phase}
            for c in schedule.commands
        ],
    }


def schedule_from_dict(doc: dict) -> CycleSchedule:
    """Inverse of ``schedule_to_dict``; command fields other than the
    centerline and amplitude are optional."""
    cmds = tuple(
        WaveformCommand(float(c["centerline"]), float(c["amplitude"]),
                        float(c.get("angular_frequency", DEFAULT_OMEGA)),
                        int(c.get("cycle_index", 0)), float(c.get("phase", 0.0)))
        for c in doc["commands"]
    )
    return CycleSchedule(cmds, float(doc.get("cycle_start", 0.0)))
