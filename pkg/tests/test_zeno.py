import numpy as np
import pytest

from zeno_dyn.analysis import fit_power_law
from zeno_dyn.errors import CapacityError, DegenerateStateError, DomainError, StructuralError
from zeno_dyn.projection import Interval, Rectangle2D, UnionOfIntervals, padded_grid, project
from zeno_dyn.propagator import PropagatorSpec, dense_propagator, evolve_dense
from zeno_dyn.state import Grid, distance
from zeno_dyn.zeno import (GaussianState, SineState, ZenoRunConfig, initial_state, matrix_power, sequential_power,
                           zeno_matrices, zeno_matrix, zeno_run, zeno_step)


@pytest.fixture(scope="module")
def cfg(small_spec, unit):
    return ZenoRunConfig(0.5, 64, unit, small_spec)


def test_config_validation(small_spec, unit):
    with pytest.raises(DomainError):
        ZenoRunConfig(0.0, 10, unit, small_spec)
    with pytest.raises(DomainError):
        ZenoRunConfig(1.0, 0, unit, small_spec)
    with pytest.raises(DomainError):
        ZenoRunConfig(1.0, 10, unit, small_spec, backend="magic")
    tight = PropagatorSpec(padded_grid(unit, 2.0, 101), padding_factor=4.0)
    with pytest.raises(StructuralError, match="padding_factor"):
        ZenoRunConfig(1.0, 10, unit, tight)


def test_whole_box_preserves_norm():
    g = Grid.line(0.0, 1.0, 256)
    spec = PropagatorSpec(g)
    config = ZenoRunConfig(1.0, 50, Interval(0.0, 1.0), spec, GaussianState(0.5, 0.1, 5.0))
    tr = zeno_run(config)
    assert np.abs(tr.survival - 1.0).max() < 1e-10
    psi = initial_state(config)
    assert abs(zeno_step(psi, config).norm() - 1.0) < 1e-10


def test_step_matches_dense_sandwich(cfg):
    psi = initial_state(cfg)
    mask = np.flatnonzero(project(psi.with_amplitudes(np.ones(psi.grid.shape)), cfg.region).amplitudes)
    block = dense_propagator(cfg.spec, cfg.dt, mask, mask)
    expected = np.zeros(psi.grid.size, dtype=complex)
    expected[mask] = block @ psi.amplitudes[mask]
    spectral = zeno_step(psi, cfg)
    assert np.abs(spectral.amplitudes - expected).max() * np.sqrt(psi.grid.cell) < 1e-8
    sandwich = project(evolve_dense(project(psi, cfg.region), cfg.dt, cfg.spec), cfg.region)
    assert distance(zeno_step(psi, cfg.with_(backend="dense")), sandwich) < 1e-8


def test_run_backends_agree(cfg):
    a = zeno_run(cfg)
    b = zeno_run(cfg.with_(backend="dense"))
    assert distance(a.final_state, b.final_state) < 1e-8


def test_survival_monotone_within_run(cfg):
    tr = zeno_run(cfg)
    assert tr.steps[0] == 0 and tr.steps[-1] == cfg.N
    assert np.all(np.diff(tr.survival) <= 1e-15)
    assert tr.survival[0] == pytest.approx(1.0, abs=1e-12)


def test_record_every_keeps_endpoints(cfg):
    tr = zeno_run(cfg.with_(N=50, record_every=7))
    assert list(tr.steps) == [0, 7, 14, 21, 28, 35, 42, 49, 50]
    assert np.allclose(tr.times, tr.steps * 0.01)


def test_zeno_monotone_across_runs(cfg):
    survival = [zeno_run(cfg.with_(N=n, record_every=n)).final_survival for n in (8, 32, 128, 512)]
    assert all(b > a for a, b in zip(survival, survival[1:]))
    assert max(survival) <= 1.0


def test_survival_at_N1000_bounded(small_spec, unit):
    """P lies in [1 - c/N, 1] with c = N (1 - P) fitted over neighbouring N."""
    ps = {n: zeno_run(ZenoRunConfig(1.0, n, unit, small_spec, record_every=n)).final_survival
          for n in (250, 500, 1000)}
    c = max(n * (1 - p) for n, p in ps.items())
    assert 1 - c / 1000 <= ps[1000] <= 1.0


@pytest.mark.xfail(strict=True, reason="per-step loss from a wall-kinked state scales as dt^1.5, not dt^2")
def test_per_step_loss_quadratic(small_spec, unit):
    psi = initial_state(ZenoRunConfig(0.5, 8, unit, small_spec))
    pts = []
    for dt in (1e-4, 3e-4, 1e-3, 3e-3):
        config = ZenoRunConfig(dt, 1, unit, small_spec)
        pts.append((dt, 1 - zeno_step(psi, config).norm2()))
    assert fit_power_law(pts).slope == pytest.approx(2.0, abs=0.15)


def test_degenerate_initial_state(small_spec, unit):
    far = GaussianState(2.2, 0.02)
    with pytest.raises(DegenerateStateError):
        zeno_run(ZenoRunConfig(0.1, 4, unit, small_spec, far))


def test_matrix_identity_at_zero_and_capacity(small_spec, unit):
    g0 = zeno_matrix(0.0, unit, small_spec, 16)
    assert np.abs(g0.matrix - np.eye(16)).max() < 1e-10
    with pytest.raises(CapacityError):
        zeno_matrix(0.01, unit, small_spec, 201 // 8 + 1)


def test_matrix_diagonal_first_order(small_spec, unit):
    t = 1e-4
    g = zeno_matrix(t, unit, small_spec, 8).matrix
    e = (np.arange(1, 4) * np.pi) ** 2 / 2
    assert np.abs(np.diag(g)[:3] - (1 - 1j * t * e)).max() < 1e-4


def test_matrix_parity_selection(small_spec, unit):
    """Modes of opposite parity about the centre do not couple."""
    g = zeno_matrix(1e-3, unit, small_spec, 8).matrix
    assert abs(g[0, 1]) < 1e-12 and abs(g[1, 4]) < 1e-12


def test_matrix_power_examples(small_spec, unit):
    g = zeno_matrix(0.01, unit, small_spec, 8).matrix
    assert np.array_equal(matrix_power(g, 1), g)
    assert np.allclose(matrix_power(g, 37), sequential_power(g, 37), atol=1e-12)
    assert np.array_equal(matrix_power(g, 0), np.eye(8))
    with pytest.raises(DomainError):
        matrix_power(g, -1)


def test_unitarity_restored_with_N(small_spec, unit):
    T = 0.5
    defects = []
    for n in (10, 100, 1000):
        gn = zeno_matrix(T / n, unit, small_spec, 16).power(n)[:4, :4]
        defects.append(np.abs(gn.conj().T @ gn - np.eye(4)).max())
    assert defects[0] > defects[1] > defects[2]


def test_zeno_matrices_share_basis(small_spec, unit):
    ts = [1e-3, 2e-3, 5e-3]
    mats = zeno_matrices(ts, unit, small_spec, 8)
    for t, m in zip(ts, mats):
        assert np.allclose(m.matrix, zeno_matrix(t, unit, small_spec, 8).matrix, atol=1e-14)


def test_matrix_needs_interval(small_spec):
    with pytest.raises(StructuralError):
        zeno_matrix(0.01, UnionOfIntervals(((0.0, 0.4), (0.6, 1.0))), small_spec)


def test_union_region_run(small_spec):
    region = UnionOfIntervals(((0.0, 0.4), (0.6, 1.0)))
    config = ZenoRunConfig(0.1, 20, region, small_spec, GaussianState(0.2, 0.05))
    tr = zeno_run(config)
    assert 0 < tr.final_survival < 1
    x = small_spec.grid.axes[0].points
    gap = (x > 0.4 + 1e-9) & (x < 0.6 - 1e-9)
    assert np.all(tr.final_state.amplitudes[gap] == 0)


def test_sine_state_2d():
    r = Rectangle2D((0.0, 1.0), (0.0, 1.0))
    spec = PropagatorSpec(padded_grid(r, 4.0, 33))
    tr = zeno_run(ZenoRunConfig(0.05, 10, r, spec, SineState((1, 1))))
    assert 0.5 < tr.final_survival < 1.0
