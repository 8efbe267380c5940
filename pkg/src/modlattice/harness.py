"""Step-response experiments and their metrics.

Rise time is the first crossing of 90% of the commanded step, linearly
interpolated between samples. RMS error is time-weighted over the part of
the step window that is both after the rise and inside the 0.3-0.9
fraction of the window. Yaw errors are always wrapped.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import defaults
from .control import ControllerGains, LatticeController, Setpoint
from .lattice import TABLE_I, LatticeConfig, lattice_from_dict, lattice_to_dict, reference_params
from .sim import DisturbanceSpec, LatticeState, SimConfig, SimulationError, Trajectory, run
from .waveform import wrap_angle

SCENARIOS = ("yaw_step", "vel_step", "combined_turn", "mismatch")
RISE_FRACTION = 0.9
RMS_WINDOW = (0.3, 0.9)


class ExperimentError(RuntimeError):
    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


@dataclass(frozen=True)
class ExperimentSpec:
    """One closed-loop run.

    ``step_magnitude`` is m/s for ``vel_step`` and rad for ``yaw_step``. For
    ``combined_turn`` it is the cruise speed and the turn is always pi; each
    phase lasts ``duration``. ``mismatch`` runs ``mismatch_of`` with the
    controller believing the drag of ``assumed_drag_n`` boats.
    """

    scenario: str = "vel_step"
    config_n: int = 3
    step_magnitude: float = 0.06
    duration: float = 45.0
    assumed_drag_n: int | None = None
    mismatch_of: str = "vel_step"
    gains: ControllerGains = field(default_factory=lambda: defaults.GAINS)
    seed: int = 0
    lattice: LatticeConfig | None = None
    disturbances: DisturbanceSpec | None = None
    turn_heading: float = 0.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.mismatch_of not in ("vel_step", "yaw_step"):
            raise ValueError("mismatch_of must be vel_step or yaw_step")
        if self.lattice is None and self.config_n not in range(2, 6):
            raise ValueError("config_n must be 2..5 without an explicit lattice")
        if self.scenario == "mismatch" and self.assumed_drag_n not in range(1, 6):
            raise ValueError("mismatch needs assumed_drag_n in 1..5")
        if self.duration < 10 * defaults.PERIOD - 1e-9:
            raise ValueError("duration must cover at least 10 cycles")

    @property
    def n_boats(self) -> int:
        return self.lattice.n_boats if self.lattice is not None else self.config_n

    @property
    def tracked(self) -> str:
        base = self.mismatch_of if self.scenario == "mismatch" else self.scenario
        return "velocity" if base == "vel_step" else "yaw"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gains"] = asdict(self.gains)
        d["lattice"] = lattice_to_dict(self.lattice) if self.lattice is not None else None
        d["disturbances"] = asdict(self.disturbances) if self.disturbances else None
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        doc = dict(doc)
        if doc.get("gains") is not None:
            doc["gains"] = ControllerGains(**doc["gains"])
        else:
            doc.pop("gains", None)
        if doc.get("lattice") is not None:
            doc["lattice"] = lattice_from_dict(doc["lattice"])
        if doc.get("disturbances") is not None:
            doc["disturbances"] = DisturbanceSpec(**doc["disturbances"])
        return cls(**doc)


@dataclass(frozen=True)
class MetricsReport:
    rise_time: float
    rms_error_post_rise: float
    overshoot: float
    settled: bool
    quantity: str = "velocity"
    final_error: float = 0.0


def _interp_crossing(t, progress, level):
    above = np.flatnonzero(progress >= level)
    if above.size == 0:
        return None
    k = int(above[0])
    if k == 0:
        return float(t[0])
    p0, p1 = progress[k - 1], progress[k]
    return float(t[k - 1] + (level - p0) * (t[k] - t[k - 1]) / (p1 - p0))


def _windowed_rms(t, err, t0, t1):
    """Time-weighted RMS of err over [t0, t1], interpolating the endpoints."""
    if t1 <= t0:
        return 0.0
    inside = (t > t0) & (t < t1)
    ts = np.concatenate([[t0], t[inside], [t1]])
    es = np.interp(ts, t, err)
    return float(math.sqrt(np.trapezoid(es ** 2, ts) / (t1 - t0)))


def step_metrics(t, value, setpoint: float, step: float, t_step: float = 0.0,
                 t_end: float | None = None, angular: bool = False) -> MetricsReport:
    """Metrics of one step response; ``value`` starts at ``setpoint - step``."""
    t = np.asarray(t, dtype=float)
    value = np.asarray(value, dtype=float)
    t_end = float(t[-1]) if t_end is None else t_end
    sel = (t >= t_step - 1e-12) & (t <= t_end + 1e-12)
    t, value = t[sel], value[sel]
    err = setpoint - value
    if angular:
        err = wrap_angle(err)
    window = t_end - t_step
    if abs(step) < 1e-15:
        progress = np.ones_like(err)
        overshoot = 0.0
    else:
        progress = 1.0 - err / step
        overshoot = max(0.0, float(np.max(progress - 1.0)))
    crossing = _interp_crossing(t, progress, RISE_FRACTION)
    settled = crossing is not None
    rise = (crossing - t_step) if settled else window
    lo = t_step + max(RMS_WINDOW[0] * window, rise)
    hi = t_step + RMS_WINDOW[1] * window
    rms = _windowed_rms(t, err, lo, hi)
    quantity = "yaw" if angular else "velocity"
    return MetricsReport(rise, rms, overshoot, settled, quantity, float(err[-1]))


def _build(spec: ExperimentSpec) -> tuple[LatticeConfig, LatticeConfig]:
    plant = spec.lattice if spec.lattice is not None else reference_params(spec.config_n)
    model = plant
    if spec.scenario == "mismatch":
        _, _, c_l, c_r = TABLE_I[spec.assumed_drag_n]
        model = plant.with_drag(c_l, c_r)
    return plant, model


def _setpoints(spec: ExperimentSpec):
    base = spec.mismatch_of if spec.scenario == "mismatch" else spec.scenario
    if spec.scenario == "combined_turn":
        h = spec.turn_heading
        return [(0.0, Setpoint(spec.step_magnitude, h)),
                (spec.duration, Setpoint(spec.step_magnitude, wrap_angle(h + math.pi)))]
    if base == "vel_step":
        return [(0.0, Setpoint(spec.step_magnitude, None))]
    return [(0.0, Setpoint(0.0, spec.step_magnitude))]


def total_duration(spec: ExperimentSpec) -> float:
    return 2 * spec.duration if spec.scenario == "combined_turn" else spec.duration


def compute_metrics(traj: Trajectory, spec: ExperimentSpec) -> MetricsReport:
    """Metrics for the quantity the scenario steps.

    For ``combined_turn`` this is the pi turn in the second phase.
    """
    if spec.scenario == "combined_turn":
        target = wrap_angle(spec.turn_heading + math.pi)
        return step_metrics(traj.time, traj.yaw, target, math.pi, spec.duration,
                            2 * spec.duration, angular=True)
    if spec.tracked == "velocity":
        return step_metrics(traj.time, traj.v_surge, spec.step_magnitude,
                            spec.step_magnitude, 0.0, spec.duration)
    return step_metrics(traj.time, traj.yaw, spec.step_magnitude, spec.step_magnitude,
                        0.0, spec.duration, angular=True)


def cruise_metrics(traj: Trajectory, spec: ExperimentSpec) -> MetricsReport:
    """Velocity metrics of the first phase of a combined turn."""
    return step_metrics(traj.time, traj.v_surge, spec.step_magnitude, spec.step_magnitude,
                        0.0, spec.duration)


def simulate(spec: ExperimentSpec) -> Trajectory:
    plant, model = _build(spec)
    controller = LatticeController(model, spec.gains, _setpoints(spec), defaults.OMEGA)
    disturbances = spec.disturbances or DisturbanceSpec()
    simcfg = SimConfig(disturbances=replace(disturbances, seed=spec.seed))
    try:
        return run(LatticeState(), controller, plant, simcfg, total_duration(spec))
    except SimulationError as exc:
        raise ExperimentError(str(exc), exc.trajectory) from exc


def run_experiment(spec: ExperimentSpec) -> tuple[Trajectory, MetricsReport]:
    traj = simulate(spec)
    return traj, compute_metrics(traj, spec)


def _metrics_only(spec: ExperimentSpec) -> MetricsReport:
    return run_experiment(spec)[1]


def run_many(specs, workers: int | None = None) -> list[MetricsReport]:
    """Run experiments, optionally in parallel; results follow ``specs`` order."""
    specs = list(specs)
    if workers and workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_metrics_only, specs))
    return [_metrics_only(s) for s in specs]


SUMMARY_METRICS = ("rise_time", "rms_error_post_rise", "overshoot")


def sweep(specs, workers: int | None = None,
          reports: list[MetricsReport] | None = None) -> list[dict]:
    """Group runs by (scenario, N) and report the interquartile range of each metric."""
    specs = list(specs)
    reports = reports if reports is not None else run_many(specs, workers)
    cells: dict[tuple[str, int], list[MetricsReport]] = {}
    for spec, rep in zip(specs, reports):
        cells.setdefault((spec.scenario, spec.n_boats), []).append(rep)
    rows = []
    for (scenario, n), reps in cells.items():
        row = {"scenario": scenario, "n_boats": n, "runs": len(reps),
               "settled_fraction": sum(r.settled for r in reps) / len(reps)}
        for name in SUMMARY_METRICS:
            vals = np.array([getattr(r, name) for r in reps])
            q1, q3 = np.percentile(vals, [25, 75])
            row[f"{name}_q1"] = float(q1)
            row[f"{name}_q3"] = float(q3)
        rows.append(row)
    return rows


SUMMARY_COLUMNS = ["scenario", "n_boats", "runs", "settled_fraction"] + [
    f"{m}_{q}" for m in SUMMARY_METRICS for q in ("q1", "q3")]


def write_outputs(out_dir, traj: Trajectory, report: MetricsReport, name: str = "run") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}_trajectory.csv", "w", newline="") as fh:
        traj.to_csv(fh)
    (out / f"{name}_metrics.json").write_text(json.dumps(asdict(report), indent=2) + "\n")
