"""Runtime checks that a cycle schedule cannot make neighbouring tails collide.

Three checks of increasing concreteness:

* ``check_assumptions``: the static condition (phase lock, centerlines in
  {0, pi}) under which collisions are impossible.
* ``sign_invariant``: every tail is on the same lateral side of its boat at
  every sampled instant.
* ``geometric_clearance``: brute-force distance between neighbouring tails,
  each modelled as a segment from the hub to the tip.

Tail-tip angle convention: ``phi = 0`` points the tail straight back along
-y, so the tip sits at ``reach * (sin(phi), -cos(phi))`` in the boat frame and
``sin(phi)`` is its lateral side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import BOAT_DIAMETER
from .waveform import FORWARD, REVERSE, CycleSchedule

SIGN_ZERO = 1e-12
MIN_SAMPLES = 8


@dataclass(frozen=True)
class TailGeometry:
    # reach and width are assumed; the hardware values are not published
    tail_reach: float = 0.09
    boat_radius: float = BOAT_DIAMETER / 2
    tail_width: float = 0.01

    def __post_init__(self):
        if not 0 < self.boat_radius < self.tail_reach:
            raise ValueError("tail tip must protrude past the boat radius")
        if self.tail_width < 0:
            raise ValueError("tail width must be non-negative")

    def validate_spacing(self, spacing: float) -> None:
        if spacing < 2 * self.boat_radius - 1e-12:
            raise ValueError("boats overlap at this spacing")
        if not self.tail_reach < self.boat_radius + spacing:
            raise ValueError("tail reach must stay short of the neighbour's far edge")


@dataclass(frozen=True)
class GuardVerdict:
    safe: bool
    violation_time: float | None = None
    violating_pair: tuple[int, int] | None = None
    min_clearance: float | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "safe": self.safe,
            "violation_time": self.violation_time,
            "violating_pair": list(self.violating_pair) if self.violating_pair else None,
            "min_clearance": self.min_clearance,
            "reason": self.reason,
        }


def _neighbour_pair(i: int, n: int) -> tuple[int, int]:
    if n == 1:
        return (0, 0)
    return (i, i + 1) if i + 1 < n else (i - 1, i)


def check_assumptions(schedule: CycleSchedule) -> GuardVerdict:
    """Static sufficient condition: phase lock plus forward/reverse centerlines."""
    cmds = schedule.commands
    n = len(cmds)
    omega = cmds[0].angular_frequency
    for i, c in enumerate(cmds):
        if c.centerline not in (FORWARD, REVERSE):
            return GuardVerdict(False, schedule.cycle_start, _neighbour_pair(i, n),
                                reason=f"boat {i} centerline {c.centerline:.6g} not in {{0, pi}}")
        if c.angular_frequency != omega:
            return GuardVerdict(False, schedule.cycle_start, _neighbour_pair(i, n),
                                reason=f"boat {i} angular frequency differs")
        if c.phase != 0.0:
            return GuardVerdict(False, schedule.cycle_start, _neighbour_pair(i, n),
                                reason=f"boat {i} has phase offset {c.phase:.6g}")
        if c.cycle_index != cmds[0].cycle_index:
            return GuardVerdict(False, schedule.cycle_start, _neighbour_pair(i, n),
                                reason=f"boat {i} is on a different cycle")
    return GuardVerdict(True)


def sample_times(period: float, samples: int) -> np.ndarray:
    """Uniform grid over one cycle plus the quarter-period extrema and the end."""
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples per cycle")
    grid = np.linspace(0.0, period, samples, endpoint=False)
    quarters = period * np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    return np.unique(np.concatenate([grid, quarters]))


def tail_angles(schedule: CycleSchedule, times: np.ndarray) -> np.ndarray:
    """Unwrapped motor angles, shape (len(times), N)."""
    phi0 = np.array([c.centerline for c in schedule.commands])
    amp = np.array([c.amplitude for c in schedule.commands])
    omega = np.array([c.angular_frequency for c in schedule.commands])
    phase = np.array([c.phase for c in schedule.commands])
    return phi0 + amp * np.cos(np.outer(times, omega) + phase) * np.cos(phi0)


def sign_invariant(schedule: CycleSchedule, samples: int = 64) -> GuardVerdict:
    """All tails on the same lateral side at every sample (zero agrees with anything)."""
    times = sample_times(schedule.period, samples)
    lateral = np.sin(tail_angles(schedule, times))
    signs = np.where(np.abs(lateral) < SIGN_ZERO, 0, np.sign(lateral)).astype(int)
    conflict = (signs.max(axis=1) > 0) & (signs.min(axis=1) < 0)
    if not conflict.any():
        return GuardVerdict(True)
    k = int(np.argmax(conflict))
    row = signs[k]
    i = int(np.flatnonzero(row != 0)[0])
    j = int(np.flatnonzero(row == -row[i])[0])
    return GuardVerdict(False, schedule.cycle_start + float(times[k]),
                        (min(i, j), max(i, j)),
                        reason="tails on opposite lateral sides")


def _point_segment_distance(p, a, b):
    """Distance from points p to segments ab; all arrays shaped (..., 2)."""
    ab = b - a
    denom = np.einsum("...i,...i->...", ab, ab)
    t = np.einsum("...i,...i->...", p - a, ab) / np.where(denom > 0, denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def segment_distance(a0, a1, b0, b1):
    """Minimum distance between 2-D segments a0a1 and b0b1 (broadcasting)."""
    d1, d2 = a1 - a0, b1 - b0
    r = b0 - a0
    denom = _cross(d1, d2)
    safe = np.where(np.abs(denom) > 1e-15, denom, 1.0)
    s = _cross(r, d2) / safe
    u = _cross(r, d1) / safe
    crossing = (np.abs(denom) > 1e-15) & (s >= 0) & (s <= 1) & (u >= 0) & (u <= 1)
    dist = np.minimum.reduce([
        _point_segment_distance(a0, b0, b1),
        _point_segment_distance(a1, b0, b1),
        _point_segment_distance(b0, a0, a1),
        _point_segment_distance(b1, a0, a1),
    ])
    return np.where(crossing, 0.0, dist)


def geometric_clearance(schedule: CycleSchedule, geom: TailGeometry | None = None,
                        spacing: float = BOAT_DIAMETER, samples: int = 64) -> GuardVerdict:
    """Brute-force clearance between neighbouring tails over one cycle.

    Clearance is the hub-to-tip segment distance between neighbours minus
    the tail width. It covers tip-to-tip contact and a tip striking the
    neighbour's tail body. Safe iff it stays positive.
    """
    geom = geom or TailGeometry()
    geom.validate_spacing(spacing)
    n = len(schedule)
    if n < 2:
        return GuardVerdict(True, min_clearance=math.inf)
    times = sample_times(schedule.period, samples)
    phi = tail_angles(schedule, times)
    hubs = np.stack([np.arange(n) * spacing, np.zeros(n)], axis=-1)
    hubs = np.broadcast_to(hubs, phi.shape + (2,))
    tips = hubs + geom.tail_reach * np.stack([np.sin(phi), -np.cos(phi)], axis=-1)

    dist = segment_distance(hubs[:, :-1], tips[:, :-1], hubs[:, 1:], tips[:, 1:])
    clearance = dist - geom.tail_width
    k, i = np.unravel_index(int(np.argmin(clearance)), clearance.shape)
    min_clear = float(clearance[k, i])
    if min_clear > 0:
        return GuardVerdict(True, min_clearance=min_clear)
    first = int(np.flatnonzero((clearance <= 0).any(axis=1))[0])
    pair_i = int(np.flatnonzero(clearance[first] <= 0)[0])
    return GuardVerdict(False, schedule.cycle_start + float(times[first]),
                        (pair_i, pair_i + 1), min_clear, reason="neighbouring tails collide")


def verify(schedule: CycleSchedule, geom: TailGeometry | None = None,
           spacing: float = BOAT_DIAMETER, samples: int = 64) -> dict[str, GuardVerdict]:
    return {
        "assumptions": check_assumptions(schedule),
        "sign_invariant": sign_invariant(schedule, samples),
        "geometric_clearance": geometric_clearance(schedule, geom, spacing, samples),
    }
