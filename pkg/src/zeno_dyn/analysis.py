"""Convergence sweeps over the measurement count N and log-log power-law fits.

The expected exponents (leakage ``-1``, state error ``-1/2``) are hypotheses
to be measured, never inputs: every report stores the raw points and
re-derives its fits from them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import __version__
from .dirichlet import DirichletSpectrum, dirichlet_evolve, solve_spectrum
from .errors import FitError, StructuralError
from .projection import Interval, Rectangle2D, region_mask
from .state import distance, inner, sine_mode
from .zeno import SineState, ZenoRunConfig, basis_matrix, initial_state, matrix_power, zeno_matrix, zeno_run

log = logging.getLogger(__name__)

DEFICIT_FLOOR = 1e-13
NO_LEAKAGE = 1e-12
MIN_FIT_POINTS = 4


class FitResult(NamedTuple):
    slope: float
    intercept: float
    residual: float


def fit_power_law(points: Sequence[tuple[float, float]]) -> FitResult:
    """Least-squares line through ``(log10 N, log10 value)``.

    ``residual`` is the RMS of the log10 residuals. Non-positive values are
    dropped with a warning; fewer than four usable points is a
    :class:`FitError`.
    """
    pts = [(float(n), float(v)) for n, v in points]
    good = [(n, v) for n, v in pts if v > 0 and n > 0 and np.isfinite(v)]
    if len(good) < len(pts):
        warnings.warn(f"{len(pts) - len(good)} non-positive point(s) excluded from the power-law fit", stacklevel=2)
    if len(good) < MIN_FIT_POINTS:
        raise FitError(f"a power-law fit needs >= {MIN_FIT_POINTS} positive points, got {len(good)}")
    x = np.log10([n for n, _ in good])
    y = np.log10([v for _, v in good])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return FitResult(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


def canonical_digest(data) -> str:
    text = json.dumps(data, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def describe(config: ZenoRunConfig) -> dict:
    """JSON-friendly summary of a run configuration (used for digests)."""
    spec = config.spec
    return {
        "T": config.T, "N": config.N, "backend": config.backend,
        "region": repr(config.region), "initial": repr(config.initial),
        "grid": [(ax.lower, ax.upper, ax.count) for ax in spec.grid.axes],
        "mass": spec.mass, "hbar": spec.hbar, "potential": repr(spec.potential),
        "padding_factor": spec.padding_factor, "dt_max": spec.dt_max, "kinetic": spec.kinetic,
    }


@dataclass
class ConvergenceReport:
    """Per-N measurements of one sweep plus the fits derived from them."""

    N: list[int]
    T: float
    digest: str
    survival_deficit: list[float] | None = None
    state_error: list[float] | None = None
    matrix_deviation: list[float] | None = None
    phase_error: dict[str, list[float]] = field(default_factory=dict)
    fits: dict[str, FitResult] = field(default_factory=dict)
    status: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.N, self.N[1:])):
            raise StructuralError("N values of a report must be strictly increasing")

    def column(self, name: str) -> list[float] | None:
        return getattr(self, name)

    def refit(self) -> "ConvergenceReport":
        """Recompute every fit from the stored raw points."""
        for name in ("survival_deficit", "state_error", "matrix_deviation"):
            col = self.column(name)
            if col is None or self.status.get(name) in ("no leakage", "skipped"):
                continue
            pts = [(n, v) for n, v in zip(self.N, col) if v >= DEFICIT_FLOOR]
            if len(pts) < len(col):
                warnings.warn(f"{name}: {len(col) - len(pts)} point(s) below {DEFICIT_FLOOR:g} excluded", stacklevel=2)
            self.fits[name] = fit_power_law(pts)
        return self

    def rows(self) -> list[dict]:
        rows = []
        for i, n in enumerate(self.N):
            row = {"N": n}
            for name in ("survival_deficit", "state_error", "matrix_deviation"):
                col = self.column(name)
                row[name] = "" if col is None else col[i]
            rows.append(row)
        return rows

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["N", "survival_deficit", "state_error", "matrix_deviation"])
            for row in self.rows():
                writer.writerow([row["N"]] + [repr(float(row[k])) if row[k] != "" else ""
                                              for k in ("survival_deficit", "state_error", "matrix_deviation")])
        return path

    def summary(self) -> dict:
        return {
            "tool_version": __version__,
            "config_digest": self.digest,
            "T": self.T,
            "N": list(self.N),
            "fits": {k: v._asdict() for k, v in self.fits.items()},
            "status": dict(self.status),
            "phase_error": {k: list(v) for k, v in self.phase_error.items()},
            "notes": list(self.notes) + [
                "expected exponents (-1 leakage, -1/2 state error) are empirical hypotheses, not inputs"],
        }

    def write_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


def _check_N(N_list: Sequence[int]) -> list[int]:
    ns = [int(n) for n in N_list]
    if ns != sorted(set(ns)):
        raise StructuralError("N_list must be strictly increasing")
    if ns and ns[0] < 8:
        raise StructuralError("sweeps need N >= 8")
    return ns


def _final_state(config: ZenoRunConfig):
    tr = zeno_run(config.with_(record_every=config.N))
    return tr.final_survival, tr.final_state


def _run_all(base: ZenoRunConfig, ns: list[int], jobs: int):
    configs = [base.with_(N=n) for n in ns]
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_final_state, configs))
    return [_final_state(c) for c in configs]


def reference_spectrum(base: ZenoRunConfig, count: int | None = None) -> DirichletSpectrum:
    """Hard-wall spectrum with as many modes as the region grid allows."""
    if count is None:
        pts = int(region_mask(base.region, base.spec.grid).sum())
        count = pts // 8
        if isinstance(base.region, Rectangle2D):
            per_axis = int(np.floor(np.sqrt(count)))
            count = (per_axis, per_axis) if not base.spec.has_potential else count
    return solve_spectrum(base.region, base.spec, count)


def leakage_sweep(base_config: ZenoRunConfig, N_list: Sequence[int], jobs: int = 1) -> ConvergenceReport:
    """Survival deficit ``1 - P^(N)(T)`` over N, fitted in log-log."""
    ns = _check_N(N_list)
    results = _run_all(base_config, ns, jobs)
    return _leakage_report(base_config, ns, [p for p, _ in results])


def _leakage_report(base, ns, survivals) -> ConvergenceReport:
    deficits = [max(0.0, 1.0 - p) for p in survivals]
    rep = ConvergenceReport(ns, base.T, canonical_digest(describe(base)), survival_deficit=deficits)
    if max(deficits) < NO_LEAKAGE:
        rep.status["survival_deficit"] = "no leakage"
        return rep
    rep.status["survival_deficit"] = "fitted"
    return rep.refit()


def state_error_sweep(base_config: ZenoRunConfig, N_list: Sequence[int], spectrum: DirichletSpectrum | None = None,
                      jobs: int = 1) -> ConvergenceReport:
    """``|| V_N(T) psi_0 - exp(-i T H_Z / hbar) psi_0 ||`` over N (neither side renormalised)."""
    ns = _check_N(N_list)
    spectrum = reference_spectrum(base_config) if spectrum is None else spectrum
    psi0 = initial_state(base_config)
    target = dirichlet_evolve(psi0, base_config.T, spectrum)
    results = _run_all(base_config, ns, jobs)
    rep = _leakage_report(base_config, ns, [p for p, _ in results])
    rep.state_error = [distance(psi, target) for _, psi in results]
    rep.status["state_error"] = "fitted"
    return rep.refit()


def convergence_sweep(base_config: ZenoRunConfig, N_list: Sequence[int], jobs: int = 1) -> ConvergenceReport:
    """Leakage and state error from a single set of runs."""
    return state_error_sweep(base_config, N_list, jobs=jobs)


def _sine_reference(base: ZenoRunConfig, M: int) -> tuple[np.ndarray, np.ndarray]:
    """``<u_m| exp(-i T H_Z) |u_n>`` in the sine basis and the energies behind it.

    Zero potential: the analytic box energies (the sine modes are the
    eigenbasis). Otherwise: the finite-difference hard-wall spectrum.
    """
    spec, region = base.spec, base.region
    if not spec.has_potential:
        energies = np.array([spec.hbar**2 * (n * np.pi / region.length) ** 2 / (2 * spec.mass)
                             for n in range(1, M + 1)])
        return np.diag(np.exp(-1j * base.T * energies / spec.hbar)), energies
    spectrum = reference_spectrum(base)
    s = basis_matrix(region, spec.grid, M, "sine")
    phi = np.stack([spectrum.mode(k).amplitudes.ravel().real for k in range(spectrum.count)], axis=1)
    overlap = s.T @ phi * spec.grid.cell
    ref = (overlap * np.exp(-1j * base.T * spectrum.energies / spec.hbar)) @ overlap.T
    return ref, spectrum.energies[:M]


def _wrap(phase):
    return (np.asarray(phase) + np.pi) % (2 * np.pi) - np.pi


def matrix_limit_sweep(base_config: ZenoRunConfig, N_list: Sequence[int], M: int = 32, modes: int = 5,
                       block: int = 1, jobs: int = 1) -> ConvergenceReport:
    """Deviation of ``[G(T/N)]^N`` from the hard-wall propagator over N.

    The deviation is the largest entry of the difference over the leading
    ``block x block`` corner (default: the ground-mode element, which is what
    a run started in ``u_1`` sees). Higher modes converge more slowly, so a
    larger block is dominated by its last mode. Per-mode phase errors of the
    diagonal are reported for the first ``modes`` modes. On a rectangle the
    diagonal element of the initial mode is obtained by state application on
    the full grid (no truncation).
    """
    ns = _check_N(N_list)
    if isinstance(base_config.region, Rectangle2D):
        return _rectangle_limit(base_config, ns, jobs)
    if not isinstance(base_config.region, Interval):
        raise StructuralError("matrix_limit_sweep needs an interval or a rectangle")
    modes, block = min(modes, M), min(block, M)
    ref, energies = _sine_reference(base_config, M)
    T, hbar = base_config.T, base_config.spec.hbar
    deviations, phases = [], {f"n={k + 1}": [] for k in range(modes)}
    last = None
    for n in ns:
        gn = matrix_power(zeno_matrix(T / n, base_config.region, base_config.spec, M).matrix, n)
        deviations.append(float(np.abs(gn[:block, :block] - ref[:block, :block]).max()))
        for k in range(modes):
            phases[f"n={k + 1}"].append(float(abs(_wrap(np.angle(gn[k, k]) + T * energies[k] / hbar))))
        last = gn
    digest = canonical_digest(describe(base_config) | {"M": M, "modes": modes, "block": block})
    rep = ConvergenceReport(ns, T, digest, matrix_deviation=deviations, phase_error=phases)
    rep.status["matrix_deviation"] = "fitted"
    # truncation check: redo the largest N with up to twice as many modes
    capacity = int(region_mask(base_config.region, base_config.spec.grid).sum()) // 8
    M2 = min(2 * M, capacity)
    if M2 <= M:
        rep.status["truncation"] = "unchecked: M is already at the grid capacity"
    else:
        g2 = matrix_power(zeno_matrix(T / ns[-1], base_config.region, base_config.spec, M2).matrix, ns[-1])
        shift = float(np.abs(g2[:block, :block] - last[:block, :block]).max())
        if shift > 0.1 * deviations[-1]:
            rep.status["truncation"] = f"truncation regime: doubling M moves the deviation by {shift:.3g}"
        else:
            rep.status["truncation"] = f"ok: doubling M moves the deviation by {shift:.3g}"
    try:
        rep.refit()
    except FitError as exc:
        rep.status["matrix_deviation"] = f"fit failed: {exc}"
    return rep


def _rectangle_limit(base: ZenoRunConfig, ns: list[int], jobs: int) -> ConvergenceReport:
    spec, region = base.spec, base.region
    label = base.initial.n if isinstance(base.initial, SineState) else (1, 1)
    base = base.with_(initial=SineState(label))
    (x0, x1), (y0, y1) = region.x, region.y
    energy = spec.hbar**2 * np.pi**2 / (2 * spec.mass) * (label[0] ** 2 / (x1 - x0) ** 2 + label[1] ** 2 / (y1 - y0) ** 2)
    u = sine_mode(spec.grid, region, label)
    target = np.exp(-1j * base.T * energy / spec.hbar)
    results = _run_all(base, ns, jobs)
    elems = [inner(u, psi) for _, psi in results]
    key = f"n={label[0]},{label[1]}"
    rep = ConvergenceReport(ns, base.T, canonical_digest(describe(base)),
                            survival_deficit=[max(0.0, 1 - p) for p, _ in results],
                            matrix_deviation=[float(abs(g - target)) for g in elems],
                            phase_error={key: [float(abs(_wrap(np.angle(g) + base.T * energy / spec.hbar))) for g in elems]})
    rep.status["matrix_deviation"] = "fitted"
    rep.status["survival_deficit"] = "fitted"
    rep.notes.append(f"rectangle mode {label}: E = {energy!r}")
    try:
        rep.refit()
    except FitError as exc:
        rep.status["matrix_deviation"] = f"fit failed: {exc}"
    return rep
