import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeno_dyn.errors import StructuralError
from zeno_dyn.projection import (Interval, Rectangle2D, UnionOfIntervals, indicator, padded_grid, project,
                                 region_mask, region_slices, survival_probability)
from zeno_dyn.state import Grid, WaveFunction, gaussian_packet, sine_mode


def test_indicator_examples():
    assert indicator(Interval(0, 1), 0.5) == 1
    assert indicator(Interval(0, 1), 1.5) == 0
    assert indicator(UnionOfIntervals(((0, 1), (2, 3))), 1.5) == 0
    assert indicator(Interval(0, 1), 1.0) == 1  # closed region


def test_indicator_dimension_mismatch():
    with pytest.raises(StructuralError):
        indicator(Rectangle2D((0, 1), (0, 1)), 0.5)


def test_union_rejects_overlap_and_sorts():
    with pytest.raises(StructuralError):
        UnionOfIntervals(((0, 1), (0.5, 2)))
    u = UnionOfIntervals(((2, 3), (0, 1)))
    assert u.intervals == ((0.0, 1.0), (2.0, 3.0))


def test_degenerate_interval_rejected():
    with pytest.raises(StructuralError):
        Interval(1.0, 1.0)


def test_project_keeps_inside_support(unit_grid, unit):
    u = sine_mode(unit_grid, unit, 3)
    assert np.array_equal(project(u, unit).amplitudes, u.amplitudes)


def test_project_constant_halves_norm():
    g = Grid.line(0.0, 2.0, 2001)
    psi = WaveFunction(g, np.ones(g.shape))
    assert project(psi, Interval(0.0, 1.0)).norm2() / psi.norm2() == pytest.approx(0.5, abs=1e-3)
    full = WaveFunction(g, np.full(g.shape, np.sqrt(0.5)))
    assert survival_probability(full, Interval(0.0, 1.0)) == pytest.approx(0.5, abs=1e-3)


def test_project_outside_grid_is_structural(unit_grid):
    with pytest.raises(StructuralError):
        project(gaussian_packet(unit_grid, 0.5, 0.1), Interval(0.5, 1.5))


def test_survival_of_gaussian_matches_quadrature():
    from scipy import integrate

    g = Grid.line(-3.0, 3.0, 6001)
    psi = gaussian_packet(g, 0.2, 0.4, 1.0)
    density = lambda x: np.exp(-((x - 0.2) ** 2) / (2 * 0.4**2)) / np.sqrt(2 * np.pi * 0.4**2)  # noqa: E731
    expected, _ = integrate.quad(density, -0.5, 1.0)
    assert survival_probability(psi, Interval(-0.5, 1.0)) == pytest.approx(expected, abs=2e-3)


def test_region_slices_requires_grid_aligned_bounds():
    g = Grid.line(0.0, 1.0, 11)
    assert region_slices(Interval(0.2, 0.5), g) == (slice(2, 6),)
    with pytest.raises(StructuralError):
        region_slices(Interval(0.25, 0.5), g)


def test_padded_grid_extent():
    g = padded_grid(Interval(0.0, 1.0), 4.0, 101)
    ax = g.axes[0]
    assert ax.upper - ax.lower >= 4.0 - 1e-12
    assert ax.index_of(0.0) is not None and ax.index_of(1.0) is not None


def test_rectangle_mask():
    g = Grid.rect((0.0, 2.0, 21), (0.0, 2.0, 21))
    m = region_mask(Rectangle2D((0.5, 1.5), (0.0, 1.0)), g)
    assert m.sum() == 11 * 11


vals = st.lists(st.floats(-5, 5), min_size=41, max_size=41)


@settings(max_examples=40, deadline=None)
@given(vals, vals, st.floats(-3, 3), st.floats(-3, 3))
def test_projection_algebra(re, im, alpha, beta):
    g = Grid.line(0.0, 4.0, 41)
    region = UnionOfIntervals(((0.5, 1.5), (2.0, 3.0)))
    psi = WaveFunction(g, np.array(re) + 1j * np.array(im))
    phi = WaveFunction(g, np.array(im) - 2j * np.array(re))
    p = project(psi, region)
    assert np.array_equal(project(p, region).amplitudes, p.amplitudes)
    assert p.norm() <= psi.norm() + 1e-15
    lhs = project(psi * alpha + phi * beta, region)
    rhs = p * alpha + project(phi, region) * beta
    assert np.allclose(lhs.amplitudes, rhs.amplitudes, rtol=0, atol=1e-12)
    if psi.norm2() > 0:
        a = survival_probability(psi, Interval(0.5, 1.5)) + survival_probability(psi, Interval(2.0, 3.0))
        assert abs(survival_probability(psi, region) - a) < 1e-12


def test_contraction_equality_iff_inside(unit_grid, unit):
    u = sine_mode(unit_grid, unit, 1)
    assert abs(project(u, unit).norm() - u.norm()) < 1e-12
    g = Grid.line(0.0, 2.0, 201)
    psi = gaussian_packet(g, 1.0, 0.3)
    assert project(psi, Interval(0.0, 1.0)).norm() < psi.norm() - 1e-3
