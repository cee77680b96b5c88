"""``zeno-dyn`` command line: run, converge, spectrum, matelem.

Exit codes: 0 success, 2 configuration error, 3 runtime or numerical error,
4 a fitted slope outside its acceptance band.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (BoxTooSmallError, CapacityError, ConfigError, DegenerateStateError, FitError, TruncationError,
                     ZenoError)
from .projection import Interval

log = logging.getLogger("zeno_dyn")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_BAND = 0, 2, 3, 4
DEFAULT_T_LIST = tuple(float(t) for t in np.geomspace(1e-4, 1e-2, 8))

_HINTS = {
    BoxTooSmallError: "increase grid.padding_factor or enlarge grid.bounds",
    DegenerateStateError: "choose an initial state with support inside the region",
    CapacityError: "request fewer modes or use more grid points",
    TruncationError: "request more modes (run.count) or a smoother initial state",
    FitError: "give at least four N values spanning 1.5 decades in run.N_list",
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_rows(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(out: Path, command: str, digest: str, started: str, outputs: list[Path]) -> Path:
    manifest = {
        "command": command,
        "config_digest": digest,
        "tool_version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [p.name for p in outputs],
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def cmd_run(loaded, out: Path, args):
    from .zeno import zeno_run

    traj = zeno_run(loaded.run)
    outputs = [_write_rows(out / "trajectory.csv", ["step", "t", "survival"], traj.rows())]
    if loaded.section.get("snapshots", False):
        grid = loaded.run.spec.grid
        rows = []
        for step, psi in zip(traj.steps, traj.snapshots):
            for idx, rho in zip(np.ndindex(grid.shape), psi.density().ravel()):
                rows.append((int(step), *idx, float(rho)))
        cols = ["step"] + [f"i{k}" for k in range(grid.dim)] + ["density"]
        outputs.append(_write_rows(out / "density.csv", cols, rows))
    log.info("final survival %.12g after N=%d", traj.final_survival, loaded.run.N)
    return outputs


def _sweep_report(loaded, args):
    from . import analysis

    run = loaded.section
    if "N_list" not in run:
        raise ConfigError("run: 'N_list' is required for converge")
    kind = run.get("sweep", "convergence")
    ns = run["N_list"]
    base = loaded.run
    if kind == "leakage":
        return analysis.leakage_sweep(base, ns, jobs=args.jobs)
    if kind == "matrix_limit":
        return analysis.matrix_limit_sweep(base, ns, M=run.get("M", 32), modes=run.get("modes", 5),
                                           block=run.get("block", 1), jobs=args.jobs)
    spectrum = None
    if "count" in run:
        spectrum = analysis.reference_spectrum(base, run["count"])
    return analysis.state_error_sweep(base, ns, spectrum=spectrum, jobs=args.jobs)


def cmd_converge(loaded, out: Path, args):
    report = _sweep_report(loaded, args)
    outputs = [report.write_csv(out / "convergence.csv"), report.write_json(out / "summary.json")]
    failed = []
    for name, (lo, hi) in loaded.bands.items():
        fit = report.fits.get(name)
        if fit is None:
            log.warning("no fit for %s; band not checked (%s)", name, report.status.get(name, "not measured"))
            continue
        ok = lo <= fit.slope <= hi
        log.info("%s slope %.4f band [%g, %g] %s", name, fit.slope, lo, hi, "ok" if ok else "OUTSIDE")
        if not ok:
            failed.append(f"{name} slope {fit.slope:.4f} outside [{lo:g}, {hi:g}]")
    return outputs, failed


def cmd_spectrum(loaded, out: Path, args):
    from .dirichlet import solve_spectrum, write_spectrum_csv

    count = loaded.section.get("count")
    spectrum = solve_spectrum(loaded.run.region, loaded.run.spec, count)
    return [write_spectrum_csv(spectrum, out / "spectrum.csv")]


def cmd_matelem(loaded, out: Path, args):
    from .asymptotics import boundary_term_diagnostic, write_diagnostic_csv

    region = loaded.run.region
    if not isinstance(region, Interval):
        raise ConfigError("region: matelem needs a single interval")
    run = loaded.section
    ts = run.get("t_list", list(DEFAULT_T_LIST))
    bases = run.get("bases", ["dirichlet_sine", "cosine"])
    defaults = {"dirichlet_sine": [(1, 3), (1, 1)], "cosine": [(0, 2)]}
    reports = []
    for basis in bases:
        for m, n in [tuple(p) for p in run["pairs"]] if "pairs" in run else defaults[basis]:
            reports.append(boundary_term_diagnostic(region, basis, m, n, ts, spec=loaded.run.spec))
    rows = []
    for rep in reports:
        for t, v in zip(rep.t, rep.values):
            rows.append((rep.basis, rep.m, rep.n, float(t), rep.quantity, float(v)))
    table = _write_rows(out / "matelem.csv", ["basis", "m", "n", "t", "quantity", "value"], rows)
    diag = write_diagnostic_csv(reports, out / "diagnostic.csv")
    for rep in reports:
        log.info("%s (%d,%d): slope %.4f", rep.basis, rep.m, rep.n, rep.slope)
    return [table, diag]


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "spectrum": cmd_spectrum, "matelem": cmd_matelem}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zeno-dyn", description="Zeno dynamics under repeated position measurements.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("run", "one measured evolution; trajectory CSV"),
                        ("converge", "sweep over N; convergence CSV and fitted slopes"),
                        ("spectrum", "hard-wall spectrum of the region"),
                        ("matelem", "short-time matrix elements and their small-t order")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, type=Path, help="JSON configuration file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--backend", choices=["dense", "spectral"], help="override run.backend")
        p.add_argument("--seedless", action="store_true",
                       help="assert that no random numbers are used (always true; reserved)")
    return parser


def _configure_logging():
    level = os.environ.get("ZENO_DYN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    started = _now()
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    from .config import load

    try:
        loaded = load(args.config, args.backend)
    except ZenoError as exc:  # ConfigError, or a structural problem found while building objects
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    failed = []
    try:
        result = COMMANDS[args.command](loaded, out, args)
        outputs, failed = result if isinstance(result, tuple) else (result, [])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ZenoError as exc:
        hint = next((h for cls, h in _HINTS.items() if isinstance(exc, cls)), None)
        print(f"error: {exc}" + (f"\nhint: {hint}" if hint else ""), file=sys.stderr)
        return EXIT_RUNTIME
    write_manifest(out, args.command, loaded.digest, started, outputs)
    if failed:
        for msg in failed:
            print(f"acceptance: {msg}", file=sys.stderr)
        return EXIT_BAND
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
