from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..control import allocate
from ..guard import TailGeometry, verify
from ..harness import ExperimentError, ExperimentSpec, run_experiment, sweep
from ..lattice import ConfigError, lattice_from_dict, lattice_to_dict, reference_params
from ..sim import Trajectory
from ..sysid import ImpulseTrial, SysIdError, calibrate_thrust, fit_drag
from ..waveform import schedule_cycle, schedule_from_dict
from . import schemas

app = FastAPI(title="modlattice", version=__version__)


def _spec(req: schemas.ExperimentRequest) -> ExperimentSpec:
    doc = req.model_dump(exclude={"include_trajectory"})
    if doc["lattice"] is not None:
        doc["lattice"] = {k: v for k, v in doc["lattice"].items() if v is not None}
    if doc["disturbances"] is not None:
        doc["disturbances"] = {**doc["disturbances"], "seed": req.seed}
    try:
        return ExperimentSpec.from_dict(doc)
    except (ValueError, ConfigError) as exc:
        raise HTTPException(422, str(exc)) from exc


def _lattice(doc: schemas.LatticeDoc | None, n: int):
    try:
        if doc is None:
            return reference_params(n)
        return lattice_from_dict(doc.model_dump(exclude_none=True))
    except ConfigError as exc:
        raise HTTPException(422, str(exc)) from exc


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/lattices/reference/{n}")
def reference_lattice(n: int):
    try:
        return lattice_to_dict(reference_params(n))
    except ConfigError as exc:
        raise HTTPException(404, str(exc)) from exc


@app.post("/experiments/run", response_model=schemas.RunResponse)
def run_one(req: schemas.RunRequest):
    spec = _spec(req)
    try:
        traj, report = run_experiment(spec)
    except ExperimentError as exc:
        raise HTTPException(500, str(exc)) from exc
    return schemas.RunResponse(
        metrics=schemas.Metrics(**asdict(report)),
        trajectory_csv=traj.to_csv() if req.include_trajectory else None,
    )


@app.post("/experiments/sweep", response_model=schemas.SweepResponse)
def run_sweep(req: schemas.SweepRequest):
    specs = [_spec(s) for s in req.specs]
    try:
        rows = sweep(specs, workers=req.workers)
    except ExperimentError as exc:
        raise HTTPException(500, str(exc)) from exc
    return schemas.SweepResponse(rows=[schemas.SweepRow(**r) for r in rows])


@app.post("/guard/verify", response_model=schemas.GuardResponse)
def guard_verify(req: schemas.GuardRequest):
    try:
        schedule = schedule_from_dict(req.model_dump())
        geom = TailGeometry(**req.geometry.model_dump())
        verdicts = verify(schedule, geom, req.spacing_m, req.samples)
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    return schemas.GuardResponse(
        safe=all(v.safe for v in verdicts.values()),
        verdicts={k: schemas.Verdict(**v.to_dict()) for k, v in verdicts.items()},
    )


@app.post("/control/allocate", response_model=schemas.AllocateResponse)
def control_allocate(req: schemas.AllocateRequest):
    config = _lattice(req.lattice, req.config_n)
    forces = allocate(config, req.v_command, req.alpha, req.yaw_rate)
    schedule = schedule_cycle(forces, config)
    return schemas.AllocateResponse(forces=forces.tolist(), centerlines=schedule.centerlines,
                                    amplitudes=schedule.amplitudes)


@app.post("/sysid/fit-drag", response_model=schemas.FitDragResponse)
def sysid_fit_drag(req: schemas.FitDragRequest):
    try:
        if req.trajectory_csv is not None:
            traj = Trajectory.from_csv(req.trajectory_csv)
            trial = ImpulseTrial.from_trajectory(traj, req.axis, req.inertia_term, req.t_start)
        elif req.times is not None and req.speeds is not None:
            trial = ImpulseTrial(tuple(req.times), tuple(req.speeds), req.axis, req.inertia_term)
        else:
            raise ValueError("provide trajectory_csv or times and speeds")
        return schemas.FitDragResponse(**asdict(fit_drag(trial)))
    except (ValueError, SysIdError) as exc:
        raise HTTPException(422, str(exc)) from exc


@app.post("/sysid/calibrate-thrust", response_model=schemas.CalibrateResponse)
def sysid_calibrate(req: schemas.CalibrateRequest):
    try:
        trials = [(t.amplitude, Trajectory.from_csv(t.trajectory_csv)) for t in req.trials]
        curve, points = calibrate_thrust(trials, req.drag_linear, req.period,
                                         tuple(req.linear_range))
    except (ValueError, SysIdError) as exc:
        raise HTTPException(422, str(exc)) from exc
    return schemas.CalibrateResponse(
        thrust_curve=[tuple(s) for s in curve.samples], period=curve.period,
        points=[schemas.ThrustPointDoc(**asdict(p)) for p in points])
