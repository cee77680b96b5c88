"""The measurement-interrupted evolution ``V_N(T) = [E_A U(T/N) E_A]^N``.

Two representations are provided:

* state application on the grid (:func:`zeno_step`, :func:`zeno_run`), which
  follows the physical protocol step by step;
* the truncated matrix ``G_mn(t) = <u_m|E_A U(t) E_A|u_n>`` in a box basis
  of the region (:func:`zeno_matrix`) and its powers.

Survival probabilities are cumulative: states are never renormalised
between measurements, so ``||V_j psi_0||^2`` is the probability of having
been found inside the region at every one of the first ``j`` measurements.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import BoxTooSmallError, CapacityError, DegenerateStateError, DomainError, StructuralError
from .projection import Interval, Region, check_inside, covers, project, region_mask
from .propagator import (PropagatorSpec, _strang, dense_propagator, edge_amplitude, evolve_dense, evolve_spectral,
                         spectral_substeps)
from .state import DEGENERATE_NORM, Grid, WaveFunction, cosine_mode, gaussian_packet, normalize, sine_mode

log = logging.getLogger(__name__)

BACKENDS = ("dense", "spectral")


@dataclass(frozen=True)
class SineState:
    """Box eigenfunction of the region; ``n`` is an int, or ``(nx, ny)`` on a rectangle."""

    n: int | tuple[int, int] = 1

    def build(self, spec: PropagatorSpec, region: Region) -> WaveFunction:
        return sine_mode(spec.grid, region, self.n)


@dataclass(frozen=True)
class GaussianState:
    center: float | tuple[float, float]
    width: float | tuple[float, float]
    momentum: float | tuple[float, float] = 0.0

    def build(self, spec: PropagatorSpec, region: Region) -> WaveFunction:
        return gaussian_packet(spec.grid, self.center, self.width, self.momentum, spec.hbar)


@dataclass(frozen=True, eq=False)
class CustomState:
    samples: np.ndarray

    def build(self, spec: PropagatorSpec, region: Region) -> WaveFunction:
        return WaveFunction(spec.grid, self.samples)


InitialState = Union[SineState, GaussianState, CustomState]


@dataclass(frozen=True)
class ZenoRunConfig:
    """One ``V_N(T)`` experiment: N measurements at ``t_j = j T / N``."""

    T: float
    N: int
    region: Region
    spec: PropagatorSpec
    initial: InitialState = field(default_factory=SineState)
    backend: str = "spectral"
    record_every: int = 1

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"total time T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be an integer >= 1, got {self.N}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise DomainError(f"record_every must be an integer >= 1, got {self.record_every}")
        if self.backend not in BACKENDS:
            raise DomainError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        check_inside(self.region, self.spec.grid)
        if not covers(self.region, self.spec.grid):
            for ax, (a, b) in zip(self.spec.grid.axes, self.region.bounds):
                needed = self.spec.padding_factor * (b - a)
                if (ax.upper - ax.lower) < needed * (1 - 1e-9):
                    raise StructuralError(
                        f"grid extent {ax.upper - ax.lower:g} is smaller than padding_factor x region extent "
                        f"= {needed:g}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    def with_(self, **changes) -> "ZenoRunConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ZenoTrajectory:
    """Recorded steps ``j`` (always including 0 and N), times, cumulative survival, snapshots."""

    steps: np.ndarray
    times: np.ndarray
    survival: np.ndarray
    snapshots: tuple[WaveFunction, ...]

    @property
    def final_state(self) -> WaveFunction:
        return self.snapshots[-1]

    @property
    def final_survival(self) -> float:
        return float(self.survival[-1])

    def rows(self) -> list[tuple[int, float, float]]:
        return [(int(j), float(t), float(p)) for j, t, p in zip(self.steps, self.times, self.survival)]


@dataclass(frozen=True, eq=False)
class ZenoMatrix:
    """``G_mn(t)`` in the first ``M`` modes of a box basis (``sine``: n = 1..M, ``cosine``: n = 0..M-1)."""

    t: float
    matrix: np.ndarray
    basis: str = "sine"

    @property
    def M(self) -> int:
        return self.matrix.shape[0]

    def power(self, N: int) -> np.ndarray:
        return matrix_power(self.matrix, N)


def initial_state(config: ZenoRunConfig) -> WaveFunction:
    """Projected, normalised initial state."""
    psi = project(config.initial.build(config.spec, config.region), config.region)
    if psi.norm() <= DEGENERATE_NORM:
        raise DegenerateStateError("the initial state has no support inside the measurement region")
    return normalize(psi)


class _Stepper:
    """Applies ``E U(dt) E`` repeatedly; state kept as a raw array."""

    def __init__(self, config: ZenoRunConfig):
        self.config = config
        self.spec = config.spec
        self.mask = region_mask(config.region, self.spec.grid)
        self.full_box = bool(np.all(self.mask == 1.0))
        if config.backend == "dense":
            self.index = np.flatnonzero(self.mask.ravel())
            self.block = dense_propagator(self.spec, config.dt, self.index, self.index)
        else:
            if not self.full_box and edge_amplitude(self.mask) > 0:
                raise BoxTooSmallError("the measurement region reaches the box edge band; increase padding_factor")
            self.substeps = spectral_substeps(config.dt, self.spec)

    def to_internal(self, psi: WaveFunction) -> np.ndarray:
        amp = np.asarray(psi.amplitudes) * self.mask
        if self.config.backend == "dense":
            return amp.ravel()[self.index]
        return amp

    def to_wavefunction(self, state: np.ndarray) -> WaveFunction:
        if self.config.backend == "dense":
            amp = np.zeros(self.spec.grid.size, dtype=complex)
            amp[self.index] = state
            return WaveFunction(self.spec.grid, amp.reshape(self.spec.grid.shape))
        return WaveFunction(self.spec.grid, state)

    def norm2(self, state: np.ndarray) -> float:
        return float(np.sum(np.abs(state) ** 2) * self.spec.grid.cell)

    def step(self, state: np.ndarray) -> np.ndarray:
        if self.config.backend == "dense":
            return self.block @ state
        return self.mask * _strang(state, self.config.dt, self.spec, self.substeps)


def zeno_step(psi: WaveFunction, config: ZenoRunConfig) -> WaveFunction:
    """One measurement cycle ``E_A U(T/N) E_A psi`` (not renormalised)."""
    inside = project(psi, config.region)
    if config.backend == "dense":
        evolved = evolve_dense(inside, config.dt, config.spec)
    else:
        evolved = evolve_spectral(inside, config.dt, config.spec,
                                  check_edges=not covers(config.region, config.spec.grid))
    return project(evolved, config.region)


def zeno_run(config: ZenoRunConfig) -> ZenoTrajectory:
    """Apply N measurement cycles to the projected, normalised initial state."""
    stepper = _Stepper(config)
    psi0 = initial_state(config)
    state = stepper.to_internal(psi0)
    steps, survival, snaps = [0], [stepper.norm2(state)], [psi0]
    for j in range(1, config.N + 1):
        state = stepper.step(state)
        if j % config.record_every == 0 or j == config.N:
            steps.append(j)
            survival.append(stepper.norm2(state))
            snaps.append(stepper.to_wavefunction(state))
    steps = np.array(steps)
    log.debug("zeno_run N=%d T=%g backend=%s P=%.6g", config.N, config.T, config.backend, survival[-1])
    return ZenoTrajectory(steps, steps * config.dt, np.array(survival), tuple(snaps))


def basis_functions(region: Region, grid: Grid, M: int, basis: str = "sine") -> list[WaveFunction]:
    if basis == "sine":
        return [sine_mode(grid, region, n) for n in range(1, M + 1)]
    if basis == "cosine":
        return [cosine_mode(grid, region, n) for n in range(0, M)]
    raise DomainError(f"unknown basis {basis!r}")


def basis_matrix(region: Region, grid: Grid, M: int, basis: str = "sine") -> np.ndarray:
    """Columns are the first M basis functions, flattened over the grid."""
    return np.stack([f.amplitudes.ravel().real for f in basis_functions(region, grid, M, basis)], axis=1)


def zeno_matrix(t: float, region: Region, spec: PropagatorSpec, M: int = 32, basis: str = "sine") -> ZenoMatrix:
    """``G_mn(t) = <u_m|E_A U(t) E_A|u_n>`` from the dense backend.

    Uses ``G = B diag(exp(-i t w / hbar)) B^T cell`` with ``B = S^T Q`` so that
    a sweep over t costs one product per t.
    """
    if not isinstance(region, Interval):
        raise StructuralError("zeno_matrix needs a single-interval region")
    check_inside(region, spec.grid)
    n_region = int(region_mask(region, spec.grid).sum())
    if M < 1 or M > n_region // 8:
        raise CapacityError(f"M = {M} exceeds the anti-aliasing bound {n_region // 8} for this grid")
    return ZenoMatrix(t, _projected_basis(region, spec, M, basis).matrix_at(t), basis)


class _ProjectedBasis:
    def __init__(self, region: Region, spec: PropagatorSpec, M: int, basis: str):
        self.spec = spec
        w, q = spec.eigensystem
        s = basis_matrix(region, spec.grid, M, basis) * region_mask(region, spec.grid).ravel()[:, None]
        self.w = w
        self.b = s.T @ q

    def matrix_at(self, t: float) -> np.ndarray:
        if t == 0:
            phase = np.ones_like(self.w)
        else:
            phase = np.exp(-1j * t * self.w / self.spec.hbar)
        return (self.b * phase) @ self.b.T * self.spec.grid.cell


def _projected_basis(region, spec, M, basis) -> _ProjectedBasis:
    cache = spec.__dict__.setdefault("_projected_basis_cache", {})
    key = (region, M, basis)
    if key not in cache:
        cache[key] = _ProjectedBasis(region, spec, M, basis)
    return cache[key]


def zeno_matrices(ts: Sequence[float], region: Region, spec: PropagatorSpec, M: int = 32,
                  basis: str = "sine") -> list[ZenoMatrix]:
    """:func:`zeno_matrix` over many times sharing one basis transform."""
    first = zeno_matrix(ts[0], region, spec, M, basis)
    pb = _projected_basis(region, spec, M, basis)
    return [first] + [ZenoMatrix(t, pb.matrix_at(t), basis) for t in ts[1:]]


def matrix_power(g: np.ndarray, N: int) -> np.ndarray:
    """``g^N`` by repeated squaring."""
    if int(N) != N or N < 0:
        raise DomainError(f"matrix power needs an integer N >= 0, got {N}")
    return np.linalg.matrix_power(g, int(N))


def sequential_power(g: np.ndarray, N: int) -> np.ndarray:
    """``g^N`` by N - 1 successive products (reference for small N)."""
    out = np.eye(g.shape[0], dtype=g.dtype)
    for _ in range(int(N)):
        out = out @ g
    return out


def sine_coefficients(psi: WaveFunction, region: Region, M: int) -> np.ndarray:
    """``<u_n|psi>`` for n = 1..M."""
    s = basis_matrix(region, psi.grid, M, "sine")
    return s.T @ psi.amplitudes.ravel() * psi.grid.cell
