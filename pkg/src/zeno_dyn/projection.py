"""Measurement regions and the position projector E_A.

E_A acts by pointwise multiplication with the characteristic function of A.
Regions are closed sets: a grid point lying on a region boundary (up to
rounding of ``1e-9 * dx``) counts as inside.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import StructuralError
from .state import Grid, WaveFunction

OVERLAP_TOL = 1e-12


def _check_interval(a: float, b: float):
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise StructuralError(f"interval needs finite a < b, got ({a}, {b})")


def _axis_mask(points: np.ndarray, a: float, b: float, tol: float) -> np.ndarray:
    return (points >= a - tol) & (points <= b + tol)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        _check_interval(self.a, self.b)

    dim = 1

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        return ((self.a, self.b),)

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return ((self.a, self.b),)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def measure(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class UnionOfIntervals:
    """Finite union of pairwise disjoint closed intervals (stored sorted)."""

    members: tuple[tuple[float, float], ...]

    def __post_init__(self):
        members = tuple(sorted((float(a), float(b)) for a, b in self.members))
        if not members:
            raise StructuralError("a union of intervals needs at least one member")
        for a, b in members:
            _check_interval(a, b)
        for (_, b0), (a1, _) in zip(members, members[1:]):
            if b0 - a1 > OVERLAP_TOL:
                raise StructuralError(f"union members overlap: ... {b0}] and [{a1} ...")
        object.__setattr__(self, "members", members)

    dim = 1

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        return self.members

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return ((self.members[0][0], self.members[-1][1]),)

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.members)


@dataclass(frozen=True)
class Rectangle2D:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]``."""

    x: tuple[float, float]
    y: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(map(float, self.x)))
        object.__setattr__(self, "y", tuple(map(float, self.y)))
        _check_interval(*self.x)
        _check_interval(*self.y)

    dim = 2

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return (self.x, self.y)

    @property
    def measure(self) -> float:
        return (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])


Region = Union[Interval, UnionOfIntervals, Rectangle2D]


def indicator(region: Region, point) -> int:
    """Characteristic function of the closed region at ``point``."""
    coords = np.atleast_1d(np.asarray(point, dtype=float))
    if coords.shape != (region.dim,):
        raise StructuralError(f"point of dimension {coords.size} for a {region.dim}D region")
    if isinstance(region, Rectangle2D):
        (x0, x1), (y0, y1) = region.bounds
        return int(x0 <= coords[0] <= x1 and y0 <= coords[1] <= y1)
    x = coords[0]
    return int(any(a <= x <= b for a, b in region.intervals))


def check_inside(region: Region, grid: Grid):
    if region.dim != grid.dim:
        raise StructuralError(f"{region.dim}D region on a {grid.dim}D grid")
    for ax, (a, b) in zip(grid.axes, region.bounds):
        tol = 1e-9 * ax.dx
        if a < ax.lower - tol or b > ax.upper + tol:
            raise StructuralError(f"region extent [{a}, {b}] exceeds grid axis [{ax.lower}, {ax.upper}]")


def region_mask(region: Region, grid: Grid) -> np.ndarray:
    """0/1 float array of ``grid.shape``: the characteristic function on the grid."""
    check_inside(region, grid)
    if isinstance(region, Rectangle2D):
        ax, ay = grid.axes
        mx = _axis_mask(ax.points, *region.x, 1e-9 * ax.dx)
        my = _axis_mask(ay.points, *region.y, 1e-9 * ay.dx)
        return np.outer(mx, my).astype(float)
    (ax,) = grid.axes
    pts = ax.points
    mask = np.zeros(ax.count, dtype=bool)
    for a, b in region.intervals:
        mask |= _axis_mask(pts, a, b, 1e-9 * ax.dx)
    return mask.astype(float)


def covers(region: Region, grid: Grid) -> bool:
    """True when every grid point is inside the region (the projector is the identity)."""
    return bool(np.all(region_mask(region, grid) == 1.0))


def region_slices(region: Region, grid: Grid) -> tuple[slice, ...]:
    """Index slices of the grid points of a single interval or rectangle.

    The region boundaries must fall on grid points.
    """
    if isinstance(region, UnionOfIntervals):
        raise StructuralError("a union of intervals has no single index block")
    check_inside(region, grid)
    slices = []
    for ax, (a, b) in zip(grid.axes, region.bounds):
        i0, i1 = ax.index_of(a), ax.index_of(b)
        if i0 is None or i1 is None:
            raise StructuralError(f"region boundary [{a}, {b}] is not aligned with the grid (dx = {ax.dx})")
        slices.append(slice(i0, i1 + 1))
    return tuple(slices)


def project(psi: WaveFunction, region: Region) -> WaveFunction:
    """E_A psi: zero the amplitudes outside the region."""
    return psi.with_amplitudes(psi.amplitudes * region_mask(region, psi.grid))


def survival_probability(psi: WaveFunction, region: Region) -> float:
    """``||E_A psi||^2``, the probability of finding the particle in the region."""
    mask = region_mask(region, psi.grid)
    return float(np.sum(mask * np.abs(psi.amplitudes) ** 2) * psi.grid.cell)


def padded_grid(region: Region, padding_factor: float = 4.0, region_points: int | Sequence[int] = 1001) -> Grid:
    """Grid whose region boundaries are grid points and whose extent is
    ``padding_factor`` times the region extent (rounded up to whole cells).

    ``region_points`` counts the grid points on ``[a, b]`` including both ends.
    """
    counts = np.broadcast_to(np.asarray(region_points, dtype=int), (region.dim,))
    axes = []
    for (a, b), n in zip(region.bounds, counts):
        length = b - a
        dx = length / (int(n) - 1)
        pad_cells = int(np.ceil((padding_factor - 1.0) * length / 2.0 / dx - 1e-9))
        lower, upper = a - pad_cells * dx, b + pad_cells * dx
        axes.append((lower, upper, int(n) - 1 + 2 * pad_cells + 1))
    if region.dim == 1:
        return Grid.line(*axes[0])
    return Grid.rect(*axes)
