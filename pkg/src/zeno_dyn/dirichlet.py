"""Hard-wall (Dirichlet) spectrum of the region and the reference evolution
``exp(-i T H_Z / hbar) E_A``.

The Hamiltonian ``p^2/2m + V`` is discretised with the three-point (1D) or
five-point (2D) stencil on the grid points strictly inside the region; the
wall points carry the boundary condition and are dropped from the unknowns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import CapacityError, DomainError, StructuralError, TruncationError
from .projection import Interval, Rectangle2D, Region, region_slices
from .propagator import Potential, PropagatorSpec, ZeroPotential
from .state import Grid, WaveFunction

DEFAULT_COUNT_1D = 48
DEFAULT_COUNT_2D = 12  # per axis
COVERAGE_TOL = 1e-8


def analytic_box_eigenvalue(n: int, L: float, m: float = 1.0, hbar: float = 1.0) -> float:
    """``E_n = hbar^2 n^2 pi^2 / (2 m L^2)`` for a particle in a box of width L."""
    if int(n) != n or n < 1:
        raise DomainError(f"box quantum number must be an integer >= 1, got {n}")
    if not L > 0:
        raise DomainError(f"box width must be positive, got {L}")
    return hbar**2 * n**2 * np.pi**2 / (2 * m * L**2)


@dataclass(frozen=True, eq=False)
class DirichletSpectrum:
    """Eigenpairs of the hard-wall Hamiltonian on a region.

    ``vectors[k]`` holds eigenfunction ``k`` on the region block of the grid
    (wall points included, where it is zero), normalised with the grid cell.
    ``labels`` are ``n`` in 1D and ``(nx, ny)`` for separable rectangle modes;
    ``analytic`` holds the zero-potential box energies when they apply.
    """

    region: Region
    grid: Grid
    slices: tuple[slice, ...]
    labels: tuple
    energies: np.ndarray
    vectors: np.ndarray
    hbar: float = 1.0
    analytic: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.energies)

    def mode(self, k: int) -> WaveFunction:
        amp = np.zeros(self.grid.shape, dtype=complex)
        amp[self.slices] = self.vectors[k]
        return WaveFunction(self.grid, amp)

    def coefficients(self, psi: WaveFunction) -> np.ndarray:
        block = psi.amplitudes[self.slices]
        flat = self.vectors.reshape(self.count, -1)
        return flat @ block.ravel() * self.grid.cell

    def rows(self) -> list[dict]:
        out = []
        for k, (label, e) in enumerate(zip(self.labels, self.energies)):
            row = {"n": label if np.isscalar(label) else "x".join(map(str, label)), "E_numeric": float(e)}
            if self.analytic is not None:
                ea = float(self.analytic[k])
                row["E_analytic"] = ea
                row["rel_error"] = abs(float(e) - ea) / abs(ea)
            out.append(row)
        return out


def _fd_1d(count: int, dx: float, c: float, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return 2 * c / dx**2 + v, np.full(count - 1, -c / dx**2)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the first clearly nonzero sample of every eigenvector positive."""
    flat = vecs.reshape(vecs.shape[0], -1)
    for row in flat:
        idx = np.argmax(np.abs(row) > 1e-8 * np.abs(row).max())
        if row[idx] < 0:
            row *= -1
    return vecs


def _solve_1d(v_int: np.ndarray, dx: float, c: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    d, e = _fd_1d(len(v_int), dx, c, v_int)
    w, q = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    return w, q.T / np.sqrt(dx)


def solve_spectrum(region: Region, spec: PropagatorSpec, count: int | Sequence[int] | None = None,
                   potential: Potential | None = None) -> DirichletSpectrum:
    """Lowest ``count`` hard-wall eigenpairs of ``p^2/2m + V`` on the region.

    ``count`` is a mode count in 1D; for a rectangle it may be ``(kx, ky)``
    (separable zero-potential case: all products with ``nx <= kx, ny <= ky``)
    or a single total. The region boundaries must be grid points.
    """
    if not isinstance(region, (Interval, Rectangle2D)):
        raise StructuralError("the Dirichlet spectrum needs a single interval or a rectangle")
    grid = spec.grid
    slices = region_slices(region, grid)
    pot = spec.potential if potential is None else potential
    v = np.asarray(pot.values(grid, spec.mass), dtype=float)[slices]
    c = spec.hbar**2 / (2 * spec.mass)
    interior = tuple(s.stop - s.start - 2 for s in slices)
    capacity = int(np.prod([s.stop - s.start for s in slices])) // 8
    zero_pot = isinstance(pot, ZeroPotential) or not np.any(v)

    if region.dim == 1:
        count = DEFAULT_COUNT_1D if count is None else int(count)
        if count < 1 or count > max(capacity, 1):
            raise CapacityError(f"{count} modes requested; the region grid supports at most {capacity}")
        if count > interior[0]:
            raise CapacityError(f"only {interior[0]} interior points")
        dx = grid.dx[0]
        w, q = _solve_1d(v[1:-1], dx, c, count)
        vecs = np.zeros((count, interior[0] + 2))
        vecs[:, 1:-1] = q
        labels = tuple(range(1, count + 1))
        analytic = None
        if zero_pot:
            analytic = np.array([analytic_box_eigenvalue(n, region.length, spec.mass, spec.hbar) for n in labels])
        return DirichletSpectrum(region, grid, slices, labels, w, _fix_signs(vecs), spec.hbar, analytic)

    if count is None:
        count = (DEFAULT_COUNT_2D, DEFAULT_COUNT_2D)
    (lx, ly) = (region.x[1] - region.x[0], region.y[1] - region.y[0])
    if zero_pot:
        kx, ky = (count, count) if np.isscalar(count) else count
        if kx * ky > capacity or kx > interior[0] or ky > interior[1]:
            raise CapacityError(f"{kx}x{ky} modes requested; the region grid supports at most {capacity}")
        wx, qx = _solve_1d(np.zeros(interior[0]), grid.dx[0], c, kx)
        wy, qy = _solve_1d(np.zeros(interior[1]), grid.dx[1], c, ky)
        qx, qy = _fix_signs(qx), _fix_signs(qy)
        pairs = [(i, j) for i in range(kx) for j in range(ky)]
        energies = np.array([wx[i] + wy[j] for i, j in pairs])
        order = np.argsort(energies, kind="stable")
        vecs = np.zeros((len(pairs), interior[0] + 2, interior[1] + 2))
        for k, idx in enumerate(order):
            i, j = pairs[idx]
            vecs[k, 1:-1, 1:-1] = np.outer(qx[i], qy[j])
        labels = tuple((pairs[i][0] + 1, pairs[i][1] + 1) for i in order)
        analytic = np.array([
            analytic_box_eigenvalue(nx, lx, spec.mass, spec.hbar) + analytic_box_eigenvalue(ny, ly, spec.mass, spec.hbar)
            for nx, ny in labels])
        return DirichletSpectrum(region, grid, slices, labels, energies[order], vecs, spec.hbar, analytic)

    total = int(np.prod(count)) if not np.isscalar(count) else int(count)
    if total > capacity:
        raise CapacityError(f"{total} modes requested; the region grid supports at most {capacity}")
    nx, ny = interior
    dx, dy = grid.dx
    lap_x = sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(nx, nx)) / dx**2
    lap_y = sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(ny, ny)) / dy**2
    h = c * (sparse.kron(lap_x, sparse.identity(ny)) + sparse.kron(sparse.identity(nx), lap_y))
    h = (h + sparse.diags(v[1:-1, 1:-1].ravel())).tocsc()
    w, q = splinalg.eigsh(h, k=total, sigma=float(v.min()) - 1.0, which="LM")
    order = np.argsort(w)
    w, q = w[order], q[:, order]
    vecs = np.zeros((total, nx + 2, ny + 2))
    vecs[:, 1:-1, 1:-1] = (q.T / np.sqrt(dx * dy)).reshape(total, nx, ny)
    return DirichletSpectrum(region, grid, slices, tuple(range(1, total + 1)), w, _fix_signs(vecs), spec.hbar)


def dirichlet_evolve(psi: WaveFunction, T: float, spectrum: DirichletSpectrum,
                     coverage_tol: float = COVERAGE_TOL) -> WaveFunction:
    """``exp(-i T H_Z / hbar) psi`` by expansion in the hard-wall eigenbasis.

    Raises :class:`TruncationError` when more than ``coverage_tol`` of the
    state's weight lies outside the retained modes.
    """
    if psi.grid != spectrum.grid:
        raise StructuralError("state and spectrum live on different grids")
    coeff = spectrum.coefficients(psi)
    total = psi.norm2()
    missing = total - float(np.sum(np.abs(coeff) ** 2))
    if missing > coverage_tol * max(total, 1.0):
        raise TruncationError(
            f"{missing:.3g} of the state's weight lies beyond the {spectrum.count} retained modes; "
            "request more modes or a smoother state")
    if T == 0:
        evolved = coeff
    else:
        evolved = coeff * np.exp(-1j * T * spectrum.energies / spectrum.hbar)
    block = np.tensordot(evolved, spectrum.vectors, axes=(0, 0))
    amp = np.zeros(psi.grid.shape, dtype=complex)
    amp[spectrum.slices] = block
    return WaveFunction(psi.grid, amp)


def limit_propagator(T: float, energies: np.ndarray, hbar: float = 1.0) -> np.ndarray:
    """Diagonal matrix ``delta_mn exp(-i T E_n / hbar)`` of the converged Zeno propagator."""
    return np.diag(np.exp(-1j * T * np.asarray(energies) / hbar))


def write_spectrum_csv(spectrum: DirichletSpectrum, path: str | Path) -> Path:
    path = Path(path)
    rows = spectrum.rows()
    fields = ["n", "E_numeric"] + (["E_analytic", "rel_error"] if spectrum.analytic is not None else [])
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path
