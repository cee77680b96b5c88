"""Unitary evolution ``U(t) = exp(-i t H / hbar)`` for ``H = p^2/2m + V``.

Two backends evolve a :class:`~zeno_dyn.state.WaveFunction` on its grid,
treated as a periodic box:

* :func:`evolve_dense` diagonalises the discretised Hamiltonian once per
  :class:`PropagatorSpec` and applies ``Q exp(-i t w / hbar) Q^T``. It is the
  oracle and is limited to grids of at most ``DENSE_MAX_POINTS`` points.
* :func:`evolve_spectral` is a Strang-split FFT propagator: exact for the
  kinetic part, second order in the substep when ``V != 0``.

By default both use the Fourier (spectral) kinetic operator, so they
discretise the same Hamiltonian and agree to rounding for ``V = 0``. The
three-point finite-difference kinetic operator is available with
``kinetic="fd"`` (dense only, hard walls at the box ends).

The closed-form kernels :func:`free_kernel` and :func:`potential_kernel` are
the continuum short-time propagators on the real line.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
import scipy.fft as sfft
from scipy import linalg

from .errors import BoxTooSmallError, CapacityError, DomainError, StructuralError
from .state import Grid, WaveFunction

DENSE_MAX_POINTS = 2048
EDGE_TOL = 1e-10
SQRT_I = np.exp(0.25j * np.pi)  # principal branch, used for every sqrt(i ...) in the package


@dataclass(frozen=True)
class ZeroPotential:
    def values(self, grid: Grid, mass: float = 1.0) -> np.ndarray:
        return np.zeros(grid.shape)


@dataclass(frozen=True)
class LinearPotential:
    """``V = F x`` along ``axis`` (unbounded below on the real line)."""

    force: float
    axis: int = 0

    def values(self, grid: Grid, mass: float = 1.0) -> np.ndarray:
        return self.force * grid.coords()[self.axis]


@dataclass(frozen=True)
class HarmonicPotential:
    """``V = m omega^2 |x - center|^2 / 2``."""

    omega: float
    center: float = 0.0

    def values(self, grid: Grid, mass: float = 1.0) -> np.ndarray:
        r2 = sum((x - self.center) ** 2 for x in grid.coords())
        return 0.5 * mass * self.omega**2 * r2


@dataclass(frozen=True, eq=False)
class TabulatedPotential:
    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DomainError("tabulated potential must be finite at every grid point")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def values(self, grid: Grid, mass: float = 1.0) -> np.ndarray:
        if self.samples.shape != grid.shape:
            raise StructuralError(f"tabulated potential shape {self.samples.shape} != grid shape {grid.shape}")
        return np.array(self.samples)


Potential = Union[ZeroPotential, LinearPotential, HarmonicPotential, TabulatedPotential]


@dataclass(frozen=True, eq=False)
class PropagatorSpec:
    """Physical and numerical parameters defining ``U(t)`` on a grid.

    ``padding_factor`` is the ratio of computational box to region extent
    that grids built for this spec are expected to honour (see
    :func:`~zeno_dyn.projection.padded_grid`).
    """

    grid: Grid
    mass: float = 1.0
    hbar: float = 1.0
    potential: Potential = field(default_factory=ZeroPotential)
    padding_factor: float = 4.0
    dt_max: float = 1e-3
    kinetic: str = "fourier"

    def __post_init__(self):
        if not self.mass > 0 or not self.hbar > 0:
            raise DomainError("mass and hbar must be positive")
        if not self.padding_factor >= 2:
            raise DomainError(f"padding_factor must be >= 2, got {self.padding_factor}")
        if not self.dt_max > 0:
            raise DomainError("dt_max must be positive")
        if self.kinetic not in ("fourier", "fd"):
            raise DomainError(f"kinetic must be 'fourier' or 'fd', got {self.kinetic!r}")
        v = self.potential_values
        if not np.all(np.isfinite(v)):
            raise DomainError("potential is not finite on the grid")
        object.__setattr__(self, "_lock", threading.Lock())
        object.__setattr__(self, "_phases", {})

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_lock", None)
        state.pop("_phases", None)
        # caches are rebuilt on demand; the eigensystem alone can be tens of MB
        state.pop("eigensystem", None)
        state.pop("_projected_basis_cache", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        object.__setattr__(self, "_lock", threading.Lock())
        object.__setattr__(self, "_phases", {})

    @cached_property
    def potential_values(self) -> np.ndarray:
        v = np.asarray(self.potential.values(self.grid, self.mass), dtype=float)
        v.setflags(write=False)
        return v

    @property
    def has_potential(self) -> bool:
        return bool(np.any(self.potential_values != 0.0))

    @cached_property
    def kinetic_energy(self) -> np.ndarray:
        """``hbar^2 |k|^2 / 2m`` on the FFT frequency grid, shape ``grid.shape``."""
        ks = [2 * np.pi * sfft.fftfreq(ax.count, d=ax.dx) for ax in self.grid.axes]
        k2 = sum(k**2 for k in np.meshgrid(*ks, indexing="ij"))
        out = self.hbar**2 * k2 / (2 * self.mass)
        out.setflags(write=False)
        return out

    def kinetic_phase(self, dt: float) -> np.ndarray:
        with self._lock:
            phase = self._phases.get(dt)
            if phase is None:
                phase = np.exp(-1j * dt * self.kinetic_energy / self.hbar)
                phase.setflags(write=False)
                if len(self._phases) > 64:
                    self._phases.clear()
                self._phases[dt] = phase
        return phase

    def _axis_kinetic_matrix(self, ax) -> np.ndarray:
        c = self.hbar**2 / (2 * self.mass)
        if self.kinetic == "fd":
            main = np.full(ax.count, 2.0 * c / ax.dx**2)
            off = np.full(ax.count - 1, -c / ax.dx**2)
            return np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
        k = 2 * np.pi * sfft.fftfreq(ax.count, d=ax.dx)
        col = sfft.ifft(c * k**2).real
        return linalg.circulant(col)

    def hamiltonian_matrix(self) -> np.ndarray:
        """Dense real-symmetric ``H`` in the flattened grid basis."""
        if self.grid.size > DENSE_MAX_POINTS:
            raise CapacityError(f"dense Hamiltonian needs <= {DENSE_MAX_POINTS} grid points, grid has {self.grid.size}")
        mats = [self._axis_kinetic_matrix(ax) for ax in self.grid.axes]
        if len(mats) == 1:
            h = mats[0]
        else:
            tx, ty = mats
            h = np.kron(tx, np.eye(ty.shape[0])) + np.kron(np.eye(tx.shape[0]), ty)
        h = h + np.diag(self.potential_values.ravel())
        return 0.5 * (h + h.T)

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """``(w, Q)`` with ``H = Q diag(w) Q^T``."""
        w, q = linalg.eigh(self.hamiltonian_matrix())
        w.setflags(write=False)
        q.setflags(write=False)
        return w, q


def free_kernel(x, y, t: float, m: float = 1.0, hbar: float = 1.0):
    """Free-particle propagator ``<x|U(t)|y> = sqrt(m / 2 pi i t hbar) exp(i m (x-y)^2 / 2 hbar t)``."""
    if not t > 0:
        raise DomainError(f"free kernel needs t > 0, got {t}")
    pref = np.sqrt(m / (2 * np.pi * t * hbar)) / SQRT_I
    return pref * np.exp(1j * m * (np.asarray(x) - np.asarray(y)) ** 2 / (2 * hbar * t))


def potential_kernel(x, y, t: float, spec: PropagatorSpec):
    """Symmetrised short-time kernel: free kernel times ``exp(-i t (V(x) + V(y)) / 2 hbar)``.

    ``V`` is evaluated at the given 1D points (tabulated potentials are
    interpolated linearly on the spec's grid).
    """
    k0 = free_kernel(x, y, t, spec.mass, spec.hbar)
    vx, vy = _potential_at(spec, x), _potential_at(spec, y)
    return k0 * np.exp(-1j * t * (vx + vy) / (2 * spec.hbar))


def _potential_at(spec: PropagatorSpec, x):
    pot = spec.potential
    x = np.asarray(x, dtype=float)
    if isinstance(pot, ZeroPotential):
        return np.zeros_like(x)
    if isinstance(pot, LinearPotential):
        return pot.force * x
    if isinstance(pot, HarmonicPotential):
        return 0.5 * spec.mass * pot.omega**2 * (x - pot.center) ** 2
    if spec.grid.dim != 1:
        raise StructuralError("pointwise kernels are 1D only")
    return np.interp(x, spec.grid.axes[0].points, pot.values(spec.grid))


def _check_grid(psi: WaveFunction, spec: PropagatorSpec):
    if psi.grid != spec.grid:
        raise StructuralError("wave function grid differs from the propagator grid")


def dense_propagator(spec: PropagatorSpec, t: float, rows=None, cols=None) -> np.ndarray:
    """Matrix of ``U(t)`` in the flattened grid basis, optionally restricted.

    ``rows`` / ``cols`` are index arrays (e.g. the points of a region), which
    yields the block ``E U(t) E`` directly.
    """
    w, q = spec.eigensystem
    qr = q if rows is None else q[rows]
    qc = q if cols is None else q[cols]
    phase = np.exp(-1j * t * w / spec.hbar)
    return (qr * phase) @ qc.T


def evolve_dense(psi: WaveFunction, t: float, spec: PropagatorSpec) -> WaveFunction:
    """``exp(-i t H / hbar) psi`` by exact diagonalisation of the discrete ``H``."""
    _check_grid(psi, spec)
    if t == 0:
        return psi
    w, q = spec.eigensystem
    coeff = q.T @ psi.amplitudes.ravel()
    out = q @ (np.exp(-1j * t * w / spec.hbar) * coeff)
    return psi.with_amplitudes(out.reshape(psi.grid.shape))


def edge_amplitude(amplitudes: np.ndarray) -> float:
    """Largest ``|psi|`` in the outer band (2% of the points, at least 2) of every axis."""
    worst = 0.0
    for axis, n in enumerate(amplitudes.shape):
        width = max(2, n // 50)
        lo = np.take(amplitudes, np.arange(width), axis=axis)
        hi = np.take(amplitudes, np.arange(n - width, n), axis=axis)
        worst = max(worst, float(np.abs(lo).max()), float(np.abs(hi).max()))
    return worst


def spectral_substeps(t: float, spec: PropagatorSpec) -> int:
    if not spec.has_potential:
        return 1
    return max(1, int(np.ceil(abs(t) / spec.dt_max - 1e-12)))


def _strang(amp: np.ndarray, t: float, spec: PropagatorSpec, substeps: int) -> np.ndarray:
    axes = tuple(range(amp.ndim))
    dt = t / substeps
    kin = spec.kinetic_phase(dt)
    if not spec.has_potential:
        for _ in range(substeps):
            amp = sfft.ifftn(kin * sfft.fftn(amp, axes=axes), axes=axes)
        return amp
    half = np.exp(-0.5j * dt * spec.potential_values / spec.hbar)
    full = half * half
    amp = half * amp
    for j in range(substeps):
        amp = sfft.ifftn(kin * sfft.fftn(amp, axes=axes), axes=axes)
        amp = (full if j < substeps - 1 else half) * amp
    return amp


def evolve_spectral(psi: WaveFunction, t: float, spec: PropagatorSpec, substeps: int | None = None,
                    check_edges: bool = True) -> WaveFunction:
    """Strang split-operator evolution on the periodic box.

    The step is divided into ``ceil(|t| / dt_max)`` substeps when ``V != 0``
    (a single exact kinetic step otherwise). With ``check_edges`` the input
    must vanish (below ``EDGE_TOL``) near the box edges, which is what keeps
    the periodic box a stand-in for the real line.
    """
    _check_grid(psi, spec)
    if spec.kinetic != "fourier":
        raise DomainError("the spectral backend only supports the Fourier kinetic operator")
    if check_edges:
        edge = edge_amplitude(psi.amplitudes)
        if edge > EDGE_TOL:
            raise BoxTooSmallError(
                f"amplitude {edge:.3g} near the box edge exceeds {EDGE_TOL:g}; increase padding_factor")
    if t == 0:
        return psi
    n = spectral_substeps(t, spec) if substeps is None else int(substeps)
    return psi.with_amplitudes(_strang(np.asarray(psi.amplitudes), t, spec, n))


def evolve(psi: WaveFunction, t: float, spec: PropagatorSpec, backend: str = "spectral", **kwargs) -> WaveFunction:
    if backend == "dense":
        return evolve_dense(psi, t, spec)
    if backend == "spectral":
        return evolve_spectral(psi, t, spec, **kwargs)
    raise DomainError(f"unknown backend {backend!r}")
