"""Uniform grids, sampled wave functions and the quadrature they share.

A :class:`Grid` is a tensor product of one or two uniform axes. Every axis
includes both of its endpoints, so ``dx = (upper - lower) / (count - 1)``.
A :class:`WaveFunction` is an immutable array of complex amplitudes on a grid,
normalised so that ``sum(|psi|**2) * cell`` is a probability.

Quadrature is the plain Riemann sum with weight ``cell = prod(dx)``. The
functions integrated in this package vanish on the region boundaries, where
this coincides with the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DegenerateStateError, DomainError, StructuralError

if TYPE_CHECKING:
    from .projection import Region

MIN_POINTS = 8
DEGENERATE_NORM = 1e-14


@dataclass(frozen=True)
class Axis:
    """One uniform axis ``lower, lower + dx, ..., upper``."""

    lower: float
    upper: float
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < MIN_POINTS:
            raise StructuralError(f"axis needs an integer point count >= {MIN_POINTS}, got {self.count}")
        if not self.upper > self.lower:
            raise StructuralError(f"axis upper bound {self.upper} must exceed lower bound {self.lower}")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))

    @property
    def dx(self) -> float:
        return (self.upper - self.lower) / (self.count - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.count)

    @property
    def period(self) -> float:
        """Length of the periodic box the FFT sees (one cell longer than the extent)."""
        return self.count * self.dx

    def index_of(self, value: float, tol: float = 1e-9) -> int | None:
        """Index of the grid point at ``value``, or None if ``value`` is off-grid."""
        pos = (value - self.lower) / self.dx
        idx = int(round(pos))
        if abs(pos - idx) <= tol and 0 <= idx < self.count:
            return idx
        return None


@dataclass(frozen=True)
class Grid:
    axes: tuple[Axis, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) not in (1, 2):
            raise StructuralError(f"only 1D and 2D grids are supported, got {len(axes)} axes")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def line(cls, lower: float, upper: float, count: int) -> "Grid":
        return cls((Axis(lower, upper, count),))

    @classmethod
    def rect(cls, x: tuple[float, float, int], y: tuple[float, float, int]) -> "Grid":
        return cls((Axis(*x), Axis(*y)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.count for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(ax.dx for ax in self.axes)

    @property
    def cell(self) -> float:
        """Quadrature weight of a single grid point."""
        return float(np.prod(self.dx))

    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape`` (``ij`` indexing)."""
        return tuple(np.meshgrid(*(ax.points for ax in self.axes), indexing="ij"))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex amplitudes sampled on a grid; immutable after construction."""

    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.shape != self.grid.shape:
            raise StructuralError(f"amplitude shape {amp.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(amp)):
            raise DomainError("wave function amplitudes must be finite")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell)

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_amplitudes(self, amplitudes: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, amplitudes)

    def _check(self, other: "WaveFunction"):
        if other.grid != self.grid:
            raise StructuralError("wave functions live on different grids")

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        self._check(other)
        return self.with_amplitudes(self.amplitudes + other.amplitudes)

    def __sub__(self, other: "WaveFunction") -> "WaveFunction":
        self._check(other)
        return self.with_amplitudes(self.amplitudes - other.amplitudes)

    def __mul__(self, scalar: complex) -> "WaveFunction":
        return self.with_amplitudes(self.amplitudes * scalar)

    __rmul__ = __mul__


def inner(a: WaveFunction, b: WaveFunction) -> complex:
    """``<a|b> = sum(conj(a) * b) * cell``."""
    if a.grid != b.grid:
        raise StructuralError("inner product of wave functions on different grids")
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.cell)


def distance(a: WaveFunction, b: WaveFunction) -> float:
    """L2 norm of ``a - b``."""
    return (a - b).norm()


def normalize(psi: WaveFunction) -> WaveFunction:
    nrm = psi.norm()
    if nrm <= DEGENERATE_NORM:
        raise DegenerateStateError(f"cannot normalise a state of norm {nrm:.3g}")
    return psi * (1.0 / nrm)


def _interval_of(region: "Region") -> tuple[float, float]:
    from .projection import Interval

    if not isinstance(region, Interval):
        raise StructuralError(f"expected a single interval region, got {type(region).__name__}")
    return region.a, region.b


def _box_mode(x: np.ndarray, a: float, b: float, n: int, kind: str) -> np.ndarray:
    length = b - a
    s = (x - a) / length
    inside = (x >= a - 1e-12 * length) & (x <= b + 1e-12 * length)
    if kind == "sine":
        vals = np.sqrt(2.0 / length) * np.sin(n * np.pi * s)
        # exact zeros on the walls rather than sin(n*pi) ~ 1e-16
        vals[np.isclose(s, 0.0, atol=1e-12) | np.isclose(s, 1.0, atol=1e-12)] = 0.0
    else:
        scale = np.sqrt(1.0 / length) if n == 0 else np.sqrt(2.0 / length)
        vals = scale * np.cos(n * np.pi * s)
    return np.where(inside, vals, 0.0)


def _check_inside(grid: Grid, bounds: Sequence[tuple[float, float]]):
    for ax, (a, b) in zip(grid.axes, bounds):
        tol = 1e-9 * ax.dx
        if a < ax.lower - tol or b > ax.upper + tol:
            raise StructuralError(f"region [{a}, {b}] is not inside grid axis [{ax.lower}, {ax.upper}]")


def sine_mode(grid: Grid, region: "Region", n: int | Sequence[int]) -> WaveFunction:
    """Dirichlet box eigenfunction ``sqrt(2/L) sin(n pi (x - a) / L)``, zero outside.

    For a :class:`~zeno_dyn.projection.Rectangle2D` pass ``n = (nx, ny)`` to get
    the separable product mode.
    """
    return _mode(grid, region, n, "sine")


def cosine_mode(grid: Grid, region: "Region", n: int | Sequence[int]) -> WaveFunction:
    """Neumann box mode: ``sqrt(1/L)`` for n = 0, else ``sqrt(2/L) cos(n pi (x - a) / L)``.

    Orthonormal and complete on the interval but nonzero at both walls.
    """
    return _mode(grid, region, n, "cosine")


def _mode(grid: Grid, region: "Region", n, kind: str) -> WaveFunction:
    from .projection import Rectangle2D

    lowest = 1 if kind == "sine" else 0
    if isinstance(region, Rectangle2D):
        if grid.dim != 2:
            raise StructuralError("rectangle modes need a 2D grid")
        nx, ny = n
        if min(nx, ny) < lowest:
            raise DomainError(f"{kind} mode indices must be >= {lowest}, got {n}")
        _check_inside(grid, (region.x, region.y))
        x, y = grid.coords()
        amp = _box_mode(x, *region.x, nx, kind) * _box_mode(y, *region.y, ny, kind)
        return WaveFunction(grid, amp)
    a, b = _interval_of(region)
    if grid.dim != 1:
        raise StructuralError("interval modes need a 1D grid")
    if int(n) != n or n < lowest:
        raise DomainError(f"{kind} mode index must be an integer >= {lowest}, got {n}")
    _check_inside(grid, [(a, b)])
    (x,) = grid.coords()
    return WaveFunction(grid, _box_mode(x, a, b, int(n), kind))


def gaussian_packet(grid: Grid, center, width, momentum=0.0, hbar: float = 1.0) -> WaveFunction:
    """Normalised Gaussian ``exp(-(x - c)^2 / (4 width^2) + i p x / hbar)``.

    ``width`` is the standard deviation of ``|psi|^2``. In 2D ``center``,
    ``width`` and ``momentum`` may be scalars or pairs.
    """
    coords = grid.coords()
    c = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    w = np.broadcast_to(np.asarray(width, dtype=float), (grid.dim,))
    p = np.broadcast_to(np.asarray(momentum, dtype=float), (grid.dim,))
    if np.any(w <= 0):
        raise DomainError("Gaussian width must be positive")
    log_amp = np.zeros(grid.shape, dtype=complex)
    for xi, ci, wi, pi in zip(coords, c, w, p):
        log_amp += -((xi - ci) ** 2) / (4 * wi**2) + 1j * pi * xi / hbar
    return normalize(WaveFunction(grid, np.exp(log_amp)))
