import numpy as np
import pytest

from zeno_dyn.projection import Interval, padded_grid
from zeno_dyn.propagator import PropagatorSpec
from zeno_dyn.state import Grid


@pytest.fixture(scope="session")
def unit():
    return Interval(0.0, 1.0)


@pytest.fixture(scope="session")
def unit_grid():
    return Grid.line(0.0, 1.0, 1024)


@pytest.fixture(scope="session")
def small_spec(unit):
    """Unit interval with 201 points inside a box four times wider (801 points)."""
    return PropagatorSpec(padded_grid(unit, 4.0, 201))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: (int(k.split()[0][1:].rstrip("abc")), k)):
            terminalreporter.write_line(RESULTS[key])
