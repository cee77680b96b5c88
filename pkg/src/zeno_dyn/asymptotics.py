"""Stationary-phase expansion of ``g(lam) = sqrt(lam / i pi) int_{-a}^{a} f(x) exp(i lam x^2) dx``.

``g = g_stat + g_bound`` with

* ``g_stat = f(0) + (i / 4 lam) f''(0) + O(lam^-2)`` (interior stationary point),
* ``g_bound = exp(i lam a^2) / (2 i a sqrt(i pi lam)) [f(a) + f(-a)] + O(lam^-3/2)``.

The oracle is :func:`oscillatory_quadrature`. The matrix-element diagnostic
:func:`boundary_term_diagnostic` shows the boundary term at work: in the
hard-wall sine basis off-diagonal ``G_mn(t)`` start at ``t^{3/2}``, in the
cosine basis (nonzero at the walls) at ``t^{1/2}``.

Large parameter and time are related by ``lam = m / (2 hbar t)``; use
:func:`lam_from_time` / :func:`time_from_lam` everywhere.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, UndersamplingError
from .projection import Interval, padded_grid
from .propagator import SQRT_I, PropagatorSpec
from .zeno import zeno_matrices

QUAD_TOL = 1e-8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def lam_from_time(t, m: float = 1.0, hbar: float = 1.0):
    return m / (2.0 * hbar * np.asarray(t, dtype=float))


def time_from_lam(lam, m: float = 1.0, hbar: float = 1.0):
    return m / (2.0 * hbar * np.asarray(lam, dtype=float))


def fresnel_prefactor(lam: float) -> complex:
    """``sqrt(lam / (i pi))`` with ``sqrt(i) = exp(i pi / 4)``."""
    return np.sqrt(lam / np.pi) / SQRT_I


@dataclass(frozen=True, eq=False)
class OscillatoryIntegral1D:
    """``f`` on ``[-a, a]`` with large parameter ``lam``.

    Give ``f`` as a vectorised callable, or give ``samples = (x, values)`` on
    a uniform grid spanning ``[-a, a]``.
    """

    f: Callable[[np.ndarray], np.ndarray] | None
    a: float
    lam: float
    samples: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"half-width a must be positive, got {self.a}")
        if not self.lam > 0:
            raise DomainError(f"lam must be positive, got {self.lam}")
        if self.f is None and self.samples is None:
            raise DomainError("need a callable f or samples")


def _gauss_panels(f, a: float, lam: float, panels: int) -> complex:
    edges = np.linspace(-a, a, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return complex(np.sum(w * np.asarray(f(x)) * np.exp(1j * lam * x * x)))


def max_sample_spacing(a: float, lam: float) -> float:
    """Finest oscillation near the ends is ``pi / (lam a)``; require a tenth of half that."""
    return np.pi / (2.0 * lam * a) / 10.0


def oscillatory_quadrature(integral: OscillatoryIntegral1D, return_error: bool = False):
    """``sqrt(lam / i pi) int_{-a}^{a} f(x) exp(i lam x^2) dx`` by brute-force quadrature.

    Callables use composite 16-point Gauss-Legendre with at least one panel
    per local wavelength, doubled until two resolutions agree to ``1e-8``.
    Samples use Simpson's rule and must satisfy :func:`max_sample_spacing`.
    """
    a, lam = integral.a, integral.lam
    pref = fresnel_prefactor(lam)
    if integral.f is None:
        x, vals = (np.asarray(v) for v in integral.samples)
        spacing = float(np.max(np.diff(x)))
        if spacing > max_sample_spacing(a, lam) * (1 + 1e-9):
            raise UndersamplingError(
                f"sample spacing {spacing:.3g} exceeds {max_sample_spacing(a, lam):.3g} for lam = {lam:g}, a = {a:g}")
        coarse = integrate.simpson(vals[::2] * np.exp(1j * lam * x[::2] ** 2), x=x[::2])
        fine = integrate.simpson(vals * np.exp(1j * lam * x**2), x=x)
        err = abs(pref * (fine - coarse))
        value = pref * fine
        return (value, err) if return_error else value

    panels = max(16, int(np.ceil(2 * a * lam * a / np.pi)))
    prev = _gauss_panels(integral.f, a, lam, panels)
    for _ in range(8):
        panels *= 2
        cur = _gauss_panels(integral.f, a, lam, panels)
        err = abs(pref * (cur - prev))
        if err < QUAD_TOL * 1e-2:
            break
        prev = cur
    if err > QUAD_TOL:
        raise UndersamplingError(f"quadrature did not converge (difference {err:.3g})")
    value = pref * cur
    return (value, err) if return_error else value


def second_derivative(f, x0: float = 0.0, h: float = 1e-3) -> float:
    """Central second difference at steps h and h/2, Richardson-combined (error O(h^4))."""
    def d2(step):
        return (f(x0 + step) - 2.0 * f(x0) + f(x0 - step)) / step**2

    return (4.0 * d2(h / 2) - d2(h)) / 3.0


def expand_stationary(f, lam: float, a: float = 1.0):
    """``f(0) + (i / 4 lam) f''(0)`` with ``f''`` from Richardson differences at ``h = 1e-3 a``."""
    return f(0.0) + 1j / (4.0 * lam) * second_derivative(f, 0.0, 1e-3 * a)


def expand_boundary(f, a: float, lam: float):
    """``exp(i lam a^2) / (2 i a sqrt(i pi lam)) [f(a) + f(-a)]``."""
    if not a > 0:
        raise DomainError("boundary term needs a > 0")
    sqrt_i_pi_lam = SQRT_I * np.sqrt(np.pi * lam)
    return np.exp(1j * lam * a * a) / (2j * a * sqrt_i_pi_lam) * (f(a) + f(-a))


def expand_stationary_nd(f, lam: float, dim: int = 2, h: float = 1e-3):
    """``f(0) + (i / 4 lam) Laplacian f(0)`` for ``f(x, y)``."""
    if dim != 2:
        raise DomainError("only the two-dimensional expansion is provided")
    lap = (second_derivative(lambda s: f(s, 0.0), 0.0, h)
           + second_derivative(lambda s: f(0.0, s), 0.0, h))
    return f(0.0, 0.0) + 1j / (4.0 * lam) * lap


@dataclass(frozen=True, eq=False)
class DiagnosticReport:
    """``|G_mn(t)|`` (or ``|Im G_nn|`` on the diagonal) over ``t`` and its fitted small-t order."""

    basis: str
    m: int
    n: int
    t: np.ndarray
    values: np.ndarray
    quantity: str
    slope: float
    intercept: float
    residual: float

    def rows(self) -> list[dict]:
        return [{"basis": self.basis, "m": self.m, "n": self.n, "t": float(t), "value": float(v),
                 "quantity": self.quantity, "slope": self.slope} for t, v in zip(self.t, self.values)]


@functools.lru_cache(maxsize=8)
def default_diagnostic_spec(region: Interval) -> PropagatorSpec:
    """Region sampled by 1001 points inside a box twice its width (cached: the eigensystem is reused)."""
    return PropagatorSpec(padded_grid(region, 2.0, 1001), padding_factor=2.0)


def boundary_term_diagnostic(region: Interval, basis: str, m: int, n: int, t_list: Sequence[float],
                             spec: PropagatorSpec | None = None, diagonal: str = "imag") -> DiagnosticReport:
    """Small-t order of ``G_mn(t)`` in the ``dirichlet_sine`` or ``cosine`` basis.

    Off the diagonal the magnitude ``|G_mn|`` is fitted. On the diagonal,
    ``diagonal="imag"`` fits ``|Im G_nn|`` (the linear term ``-i t E_n / hbar``)
    and ``diagonal="remainder"`` fits ``|G_nn - (1 - i t E_n / hbar)|`` with the
    box energy of the sine mode.
    """
    from .analysis import fit_power_law

    if diagonal not in ("imag", "remainder"):
        raise DomainError(f"diagonal must be 'imag' or 'remainder', got {diagonal!r}")
    key = {"dirichlet_sine": "sine", "sine": "sine", "cosine": "cosine"}.get(basis)
    if key is None:
        raise DomainError(f"unknown basis {basis!r}")
    offset = 1 if key == "sine" else 0
    if min(m, n) < offset:
        raise DomainError(f"{basis} indices start at {offset}")
    spec = default_diagnostic_spec(region) if spec is None else spec
    size = max(m, n) - offset + 1
    M = max(8, size)
    ts = np.asarray(sorted(t_list), dtype=float)
    mats = zeno_matrices(list(ts), region, spec, M, key)
    g = np.array([z.matrix[m - offset, n - offset] for z in mats])
    if m == n and diagonal == "remainder":
        if key != "sine":
            raise DomainError("the first-order remainder is defined for the sine basis only")
        energy = spec.hbar**2 * (n * np.pi / region.length) ** 2 / (2 * spec.mass)
        values, quantity = np.abs(g - (1 - 1j * ts * energy / spec.hbar)), "abs_remainder"
    elif m == n:
        values, quantity = np.abs(g.imag), "abs_imag_G"
    else:
        values, quantity = np.abs(g), "abs_G"
    fit = fit_power_law(list(zip(ts, values)))
    return DiagnosticReport("dirichlet_sine" if key == "sine" else "cosine", m, n, ts, values, quantity,
                            fit.slope, fit.intercept, fit.residual)


def write_diagnostic_csv(reports: Sequence[DiagnosticReport], path: str | Path) -> Path:
    path = Path(path)
    fields = ["basis", "m", "n", "t", "quantity", "value", "slope"]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for rep in reports:
            for row in rep.rows():
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path
