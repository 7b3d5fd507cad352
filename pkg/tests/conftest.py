import numpy as np
import pytest

from spverdoorn.weights import Region, build_weights


def line_regions():
    # equal spacing along the equator: each region neighbors only the adjacent ones at 150 km
    return [Region(str(i + 1), f"line {i + 1}", 0.0, float(i)) for i in range(4)]


@pytest.fixture
def line_w():
    return build_weights(line_regions(), cutoff_km=150.0)


@pytest.fixture
def line_x():
    return np.array([1.0, 1.0, -1.0, -1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
