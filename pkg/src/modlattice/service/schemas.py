"""Request and response models for the HTTP API."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from .. import defaults
from ..lattice import BOAT_DIAMETER


class Gains(BaseModel):
    kp_v: float = Field(defaults.GAINS.kp_v, ge=0)
    kd_v: float = Field(defaults.GAINS.kd_v, ge=0)
    kp_yaw: float = Field(defaults.GAINS.kp_yaw, ge=0)
    kd_yaw: float = Field(defaults.GAINS.kd_yaw, ge=0)


class Disturbances(BaseModel):
    switch_impulse_sway: float = 0.0
    switch_impulse_yaw: float = 0.0
    thrust_scale: float = Field(1.0, gt=0)
    impulse_jitter: float = Field(0.0, ge=0)


class LatticeDoc(BaseModel):
    n_boats: int = Field(ge=2)
    spacing_m: float = Field(BOAT_DIAMETER, gt=0)
    masses_kg: Optional[list[float]] = None
    inertias_kgm2: Optional[list[float]] = None
    drag_linear: float = Field(gt=0)
    drag_yaw: float = Field(gt=0)
    drag_sway: Optional[float] = None
    thrust_curve: Optional[list[tuple[float, float]]] = None
    thrust_period_s: Optional[float] = None
    amp_min_rad: Optional[float] = None
    amp_max_rad: Optional[float] = None


class ExperimentRequest(BaseModel):
    scenario: Literal["yaw_step", "vel_step", "combined_turn", "mismatch"] = "vel_step"
    config_n: int = Field(3, ge=2, le=5)
    step_magnitude: float = 0.06
    duration: float = 45.0
    assumed_drag_n: Optional[int] = Field(None, ge=1, le=5)
    mismatch_of: Literal["vel_step", "yaw_step"] = "vel_step"
    gains: Gains = Field(default_factory=Gains)
    seed: int = 0
    lattice: Optional[LatticeDoc] = None
    disturbances: Optional[Disturbances] = None
    turn_heading: float = 0.0


class RunRequest(ExperimentRequest):
    include_trajectory: bool = True


class Metrics(BaseModel):
    rise_time: float
    rms_error_post_rise: float
    overshoot: float
    settled: bool
    quantity: str
    final_error: float


class RunResponse(BaseModel):
    metrics: Metrics
    trajectory_csv: Optional[str] = None


class SweepRequest(BaseModel):
    specs: list[ExperimentRequest]
    workers: Optional[int] = Field(None, ge=1)


class SweepRow(BaseModel):
    scenario: str
    n_boats: int
    runs: int
    settled_fraction: float
    rise_time_q1: float
    rise_time_q3: float
    rms_error_post_rise_q1: float
    rms_error_post_rise_q3: float
    overshoot_q1: float
    overshoot_q3: float


class SweepResponse(BaseModel):
    rows: list[SweepRow]


class Command(BaseModel):
    centerline: float
    amplitude: float = Field(ge=0)
    angular_frequency: float = Field(defaults.OMEGA, gt=0)
    cycle_index: int = 0
    phase: float = 0.0


class TailGeometryDoc(BaseModel):
    tail_reach: float = 0.09
    boat_radius: float = BOAT_DIAMETER / 2
    tail_width: float = 0.01


class GuardRequest(BaseModel):
    commands: list[Command] = Field(min_length=1)
    cycle_start: float = 0.0
    spacing_m: float = Field(BOAT_DIAMETER, gt=0)
    samples: int = Field(64, ge=8)
    geometry: TailGeometryDoc = Field(default_factory=TailGeometryDoc)


class Verdict(BaseModel):
    safe: bool
    violation_time: Optional[float] = None
    violating_pair: Optional[tuple[int, int]] = None
    min_clearance: Optional[float] = None
    reason: str = ""


class GuardResponse(BaseModel):
    safe: bool
    verdicts: dict[str, Verdict]


class AllocateRequest(BaseModel):
    lattice: Optional[LatticeDoc] = None
    config_n: int = Field(3, ge=2, le=5)
    v_command: float
    alpha: float = 0.0
    yaw_rate: float = 0.0


class AllocateResponse(BaseModel):
    forces: list[float]
    centerlines: list[float]
    amplitudes: list[float]


class FitDragRequest(BaseModel):
    axis: Literal["linear", "yaw"] = "linear"
    inertia_term: float = Field(gt=0)
    trajectory_csv: Optional[str] = None
    times: Optional[list[float]] = None
    speeds: Optional[list[float]] = None
    t_start: Optional[float] = None


class FitDragResponse(BaseModel):
    coefficient: float
    residual_rms: float
    std: float
    initial_speed: float


class ThrustTrial(BaseModel):
    amplitude: float
    trajectory_csv: str


class CalibrateRequest(BaseModel):
    trials: list[ThrustTrial] = Field(min_length=2)
    drag_linear: float = Field(gt=0)
    period: float = Field(defaults.PERIOD, gt=0)
    linear_range: tuple[float, float] = (0.75, 2.75)


class ThrustPointDoc(BaseModel):
    amplitude: float
    speed: float
    thrust: float
    steady: bool
    flag: str


class CalibrateResponse(BaseModel):
    thrust_curve: list[tuple[float, float]]
    period: float
    points: list[ThrustPointDoc]
