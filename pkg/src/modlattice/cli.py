"""Command-line client for the modlattice API.

Every subcommand except ``serve`` is a request to the HTTP service. With
``--server URL`` the request goes to a running server; without it the app
is mounted in-process, so the CLI works stand-alone.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path


class ApiError(RuntimeError):
    pass


class Client:
    def __init__(self, server: str | None = None):
        if server:
            import httpx
            self._http = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app
            self._http = TestClient(app)

    def _check(self, resp):
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ApiError(f"{resp.status_code}: {detail}")
        return resp.json()

    def get(self, path: str):
        return self._check(self._http.get(path))

    def post(self, path: str, payload: dict):
        return self._check(self._http.post(path, json=payload))


def _load_json(path: str):
    return json.loads(Path(path).read_text())


def _write_rows(path: Path, rows: list[dict]) -> None:
    from .harness import SUMMARY_COLUMNS

    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def cmd_run(args, client: Client) -> int:
    spec = _load_json(args.spec)
    resp = client.post("/experiments/run", {**spec, "include_trajectory": True})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name or Path(args.spec).stem
    (out / f"{name}_trajectory.csv").write_text(resp["trajectory_csv"])
    (out / f"{name}_metrics.json").write_text(json.dumps(resp["metrics"], indent=2) + "\n")
    print(json.dumps(resp["metrics"], indent=2))
    return 0


def _expand(doc) -> list[dict]:
    """A sweep file is a list of specs, or {"specs": [...], "seeds": [...]}."""
    if isinstance(doc, list):
        return doc
    specs = doc["specs"]
    seeds = doc.get("seeds")
    if seeds:
        specs = [{**s, "seed": seed} for s in specs for seed in seeds]
    return specs


def cmd_sweep(args, client: Client) -> int:
    specs = _expand(_load_json(args.specs))
    resp = client.post("/experiments/sweep", {"specs": specs, "workers": args.workers})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "summary.csv", resp["rows"])
    for row in resp["rows"]:
        print(f"{row['scenario']:>14} N={row['n_boats']} runs={row['runs']} "
              f"rise=[{row['rise_time_q1']:.2f}, {row['rise_time_q3']:.2f}] s "
              f"rms=[{row['rms_error_post_rise_q1']:.4g}, {row['rms_error_post_rise_q3']:.4g}]")
    return 0


def cmd_guard_verify(args, client: Client) -> int:
    doc = _load_json(args.schedule)
    if args.samples:
        doc["samples"] = args.samples
    resp = client.post("/guard/verify", doc)
    for name, v in resp["verdicts"].items():
        status = "safe" if v["safe"] else f"UNSAFE ({v['reason']}, t={v['violation_time']}, pair={v['violating_pair']})"
        print(f"{name}: {status}")
    print("verdict:", "safe" if resp["safe"] else "unsafe")
    return 0 if resp["safe"] else 1


def cmd_fit_drag(args, client: Client) -> int:
    payload = {"axis": args.axis, "inertia_term": args.inertia,
               "trajectory_csv": Path(args.csv).read_text(), "t_start": args.t_start}
    resp = client.post("/sysid/fit-drag", payload)
    text = json.dumps(resp, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_calibrate(args, client: Client) -> int:
    trials = []
    for item in args.trial:
        amp, _, path = item.partition(":")
        if not path:
            raise SystemExit(f"--trial expects AMPLITUDE:CSV, got {item!r}")
        trials.append({"amplitude": float(amp), "trajectory_csv": Path(path).read_text()})
    resp = client.post("/sysid/calibrate-thrust", {
        "trials": trials, "drag_linear": args.drag_linear, "period": args.period})
    text = json.dumps(resp, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_reference(args, client: Client) -> int:
    print(json.dumps(client.get(f"/lattices/reference/{args.n}"), indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("modlattice.service:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modlattice", description=__doc__.splitlines()[0])
    p.add_argument("--server", help="base URL of a running modlattice server")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--spec", required=True, help="experiment spec JSON")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--name", help="output file prefix (default: spec file stem)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run many experiments and summarise as IQRs")
    s.add_argument("--specs", required=True, help="JSON list of specs, or {specs, seeds}")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("guard", help="undocking guard")
    gsub = g.add_subparsers(dest="guard_command", required=True)
    gv = gsub.add_parser("verify", help="check a schedule; exit 1 if unsafe")
    gv.add_argument("schedule")
    gv.add_argument("--samples", type=int)
    gv.set_defaults(func=cmd_guard_verify)

    y = sub.add_parser("sysid", help="system identification")
    ysub = y.add_subparsers(dest="sysid_command", required=True)
    fd = ysub.add_parser("fit-drag", help="fit a quadratic drag coefficient to a coast-down")
    fd.add_argument("--csv", required=True, help="trajectory CSV")
    fd.add_argument("--axis", choices=["linear", "yaw"], default="linear")
    fd.add_argument("--inertia", type=float, required=True, help="mass [kg] or inertia [kg m^2]")
    fd.add_argument("--t-start", type=float, help="start of the coast-down (default: peak speed)")
    fd.add_argument("--out")
    fd.set_defaults(func=cmd_fit_drag)
    ct = ysub.add_parser("calibrate-thrust", help="thrust curve from steady swimming runs")
    ct.add_argument("--trial", action="append", required=True, metavar="AMP:CSV")
    ct.add_argument("--drag-linear", type=float, required=True)
    ct.add_argument("--period", type=float, default=1.5)
    ct.add_argument("--out")
    ct.set_defaults(func=cmd_calibrate)

    ref = sub.add_parser("reference", help="print the reference lattice for N boats")
    ref.add_argument("n", type=int)
    ref.set_defaults(func=cmd_reference)

    sv = sub.add_parser("serve", help="start the HTTP server")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.set_defaults(func=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    try:
        return args.func(args, Client(args.server))
    except ApiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
