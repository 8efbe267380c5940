"""Boat and parallel-lattice parameters.

All quantities are SI. Table values published in g*m^2 are converted once,
here, at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

# Modboat diameter; docked neighbours touch, so this is also the spacing.
BOAT_DIAMETER = 0.1524
BOAT_MASS = 0.66
BOAT_INERTIA = 2.05e-3
CALIBRATION_PERIOD = 1.5
AMP_MIN = 0.75
AMP_MAX = 2.75

# n -> (M [kg], I [kg m^2], C_L [kg/m], C_R [kg m^2])
TABLE_I = {
    1: (0.66, 2.05e-3, 2.48, 0.40e-3),
    2: (1.32, 11.8e-3, 4.67, 6.50e-3),
    3: (1.98, 36.8e-3, 7.00, 32.0e-3),
    4: (2.64, 84.8e-3, 9.75, 107e-3),
    5: (3.30, 164e-3, 13.7, 307e-3),
}

COM_TOL = 1e-9


class ConfigError(ValueError):
    """Raised for physically invalid boat or lattice parameters."""


@dataclass(frozen=True)
class ThrustCurve:
    """Cycle-averaged thrust as a function of oscillation amplitude.

    Piecewise linear through ``samples``; zero below the first sample
    (flippers do not open) and flat above the last one.
    """

    samples: tuple[tuple[float, float], ...]
    period: float = CALIBRATION_PERIOD

    def __post_init__(self):
        samples = tuple((float(a), float(f)) for a, f in self.samples)
        object.__setattr__(self, "samples", samples)
        if len(samples) < 2:
            raise ConfigError("thrust curve needs at least 2 samples")
        amps = np.array([a for a, _ in samples])
        thrust = np.array([f for _, f in samples])
        if np.any(np.diff(amps) <= 0):
            raise ConfigError("thrust curve amplitudes must be strictly increasing")
        if np.any(thrust < 0) or np.any(np.diff(thrust) < 0):
            raise ConfigError("thrust must be non-negative and non-decreasing")
        if self.period <= 0:
            raise ConfigError("period must be positive")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for a, _ in self.samples])

    @property
    def thrusts(self) -> np.ndarray:
        return np.array([f for _, f in self.samples])

    def thrust(self, amplitude: float) -> float:
        if amplitude < self.samples[0][0]:
            return 0.0
        return float(np.interp(amplitude, self.amplitudes, self.thrusts))

    @classmethod
    def linear(cls, f_lo: float, f_hi: float, amp_lo: float = AMP_MIN,
               amp_hi: float = AMP_MAX, n: int = 5,
               period: float = CALIBRATION_PERIOD) -> "ThrustCurve":
        amps = np.linspace(amp_lo, amp_hi, n)
        forces = np.linspace(f_lo, f_hi, n)
        return cls(tuple(zip(amps.tolist(), forces.tolist())), period)


# Linear over the activated range [0.75, 2.75] rad at T = 1.5 s.
DEFAULT_THRUST_CURVE = ThrustCurve.linear(0.0015, 0.040)


@dataclass(frozen=True)
class BoatParams:
    mass: float = BOAT_MASS
    moment_of_inertia: float = BOAT_INERTIA
    diameter: float = BOAT_DIAMETER
    f_max: float | None = None
    amp_min: float = AMP_MIN
    amp_max: float = AMP_MAX
    thrust_curve: ThrustCurve = DEFAULT_THRUST_CURVE

    def __post_init__(self):
        if self.f_max is None:
            object.__setattr__(self, "f_max", self.thrust_curve.thrust(self.amp_max))
        if self.mass <= 0 or self.moment_of_inertia <= 0:
            raise ConfigError("mass and moment of inertia must be positive")
        if self.diameter <= 0:
            raise ConfigError("diameter must be positive")
        if not 0 < self.amp_min < self.amp_max <= math.pi:
            raise ConfigError("need 0 < amp_min < amp_max <= pi")
        if not self.f_max > 0:
            raise ConfigError("f_max must be positive")


@dataclass(frozen=True)
class AggregateParams:
    total_mass: float
    total_inertia: float
    n_boats: int


@dataclass(frozen=True)
class LatticeConfig:
    """Parallel lattice: boats on a line along the structural x axis.

    ``positions_x`` are signed distances from the lattice COM.
    """

    boats: tuple[BoatParams, ...]
    positions_x: tuple[float, ...]
    drag_linear: float
    drag_yaw: float
    drag_sway: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "boats", tuple(self.boats))
        object.__setattr__(self, "positions_x", tuple(float(x) for x in self.positions_x))
        if self.drag_sway is None:
            object.__setattr__(self, "drag_sway", self.drag_linear)
        n = len(self.boats)
        if n < 2:
            raise ConfigError("a lattice needs at least 2 boats (controller is degenerate for one)")
        if len(self.positions_x) != n:
            raise ConfigError("positions_x and boats differ in length")
        if any(b >= a for a, b in zip(self.positions_x[1:], self.positions_x[:-1])):
            raise ConfigError("positions must be strictly increasing")
        moment = sum(b.mass * x for b, x in zip(self.boats, self.positions_x))
        if abs(moment) > COM_TOL:
            raise ConfigError(f"positions are not COM-relative (sum m_i x_i = {moment:.3g})")
        if min(self.drag_linear, self.drag_yaw, self.drag_sway) <= 0:
            raise ConfigError("drag coefficients must be positive")

    @property
    def n_boats(self) -> int:
        return len(self.boats)

    @classmethod
    def from_boats(cls, boats: Sequence[BoatParams], offsets: Sequence[float],
                   drag_linear: float, drag_yaw: float,
                   drag_sway: float | None = None) -> "LatticeConfig":
        """Build a lattice from arbitrary offsets, shifting them onto the COM."""
        masses = np.array([b.mass for b in boats])
        offsets = np.asarray(offsets, dtype=float)
        com = float(masses @ offsets / masses.sum())
        positions = offsets - com
        return cls(tuple(boats), tuple(positions.tolist()), drag_linear, drag_yaw, drag_sway)

    @classmethod
    def uniform(cls, n: int, drag_linear: float, drag_yaw: float,
                spacing: float = BOAT_DIAMETER, boat: BoatParams | None = None,
                drag_sway: float | None = None) -> "LatticeConfig":
        boat = boat or BoatParams()
        # symmetric about zero, so equal masses give an exact COM
        positions = (np.arange(n) - (n - 1) / 2.0) * spacing
        return cls((boat,) * n, tuple(positions.tolist()), drag_linear, drag_yaw, drag_sway)

    def with_drag(self, drag_linear: float, drag_yaw: float) -> "LatticeConfig":
        return replace(self, drag_linear=drag_linear, drag_yaw=drag_yaw, drag_sway=None)


def aggregate(config: LatticeConfig) -> AggregateParams:
    """Total mass and parallel-axis inertia about the lattice COM."""
    if config.n_boats < 2:
        raise ConfigError("aggregate needs at least 2 boats")
    mass = sum(b.mass for b in config.boats)
    inertia = sum(b.moment_of_inertia + b.mass * x * x
                  for b, x in zip(config.boats, config.positions_x))
    return AggregateParams(mass, inertia, config.n_boats)


def structural_matrix(config: LatticeConfig) -> np.ndarray:
    """2 x N map from per-boat surge forces to (net surge force, yaw torque)."""
    return np.vstack([np.ones(config.n_boats), np.asarray(config.positions_x)])


def reference_params(n: int, thrust_curve: ThrustCurve | None = None) -> LatticeConfig:
    """Lattice of n identical boats with the published drag coefficients.

    Mass and inertia are not stored directly; they follow from the boats at
    diameter spacing and agree with the published table to better than 0.3%.
    """
    if n not in range(2, 6):
        raise ConfigError(f"reference parameters exist for 2..5 boats, got {n}")
    _, _, c_l, c_r = TABLE_I[n]
    boat = BoatParams(thrust_curve=thrust_curve) if thrust_curve else BoatParams()
    return LatticeConfig.uniform(n, c_l, c_r, boat=boat)


def lattice_from_dict(doc: dict) -> LatticeConfig:
    """Build a lattice from the JSON document layout.

    Keys: n_boats, spacing_m, masses_kg, inertias_kgm2, drag_linear,
    drag_yaw, thrust_curve ([[amplitude_rad, thrust_N], ...]). Per-boat lists
    may be omitted or given as a single value to mean "all boats".
    """
    n = int(doc["n_boats"])
    spacing = float(doc.get("spacing_m", BOAT_DIAMETER))

    def per_boat(key, default):
        vals = doc.get(key)
        if vals is None:
            return [default] * n
        if isinstance(vals, (int, float)):
            return [float(vals)] * n
        if len(vals) != n:
            raise ConfigError(f"{key} has {len(vals)} entries for {n} boats")
        return [float(v) for v in vals]

    masses = per_boat("masses_kg", BOAT_MASS)
    inertias = per_boat("inertias_kgm2", BOAT_INERTIA)
    curve = DEFAULT_THRUST_CURVE
    if doc.get("thrust_curve"):
        curve = ThrustCurve(tuple((a, f) for a, f in doc["thrust_curve"]),
                            float(doc.get("thrust_period_s", CALIBRATION_PERIOD)))
    amp_min = float(doc.get("amp_min_rad", AMP_MIN))
    amp_max = float(doc.get("amp_max_rad", AMP_MAX))
    boats = [BoatParams(m, i, diameter=spacing, amp_min=amp_min, amp_max=amp_max,
                        thrust_curve=curve) for m, i in zip(masses, inertias)]
    offsets = np.arange(n) * spacing
    return LatticeConfig.from_boats(boats, offsets, float(doc["drag_linear"]),
                                    float(doc["drag_yaw"]), doc.get("drag_sway"))


def lattice_to_dict(config: LatticeConfig) -> dict:
    gaps = np.diff(config.positions_x)
    if not np.allclose(gaps, gaps[0], rtol=0, atol=1e-12):
        raise ConfigError("only uniformly spaced lattices have a JSON form")
    curve = config.boats[0].thrust_curve
    doc = {
        "n_boats": config.n_boats,
        "spacing_m": float(gaps[0]),
        "masses_kg": [b.mass for b in config.boats],
        "inertias_kgm2": [b.moment_of_inertia for b in config.boats],
        "drag_linear": config.drag_linear,
        "drag_yaw": config.drag_yaw,
        "thrust_curve": [list(s) for s in curve.samples],
        "thrust_period_s": curve.period,
        "amp_min_rad": config.boats[0].amp_min,
        "amp_max_rad": config.boats[0].amp_max,
    }
    if config.drag_sway != config.drag_linear:
        doc["drag_sway"] = config.drag_sway
    return doc
