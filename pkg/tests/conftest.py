import pytest

from fockflow.models import EmitterModel
from fockflow.vapor import VaporCell, cesium_d1_data, optical_response, window_center
from fockflow.wavepacket import FrequencyGrid

TAU = 0.43e-9


@pytest.fixture(scope="session")
def grid():
    return FrequencyGrid.default(cesium_d1_data().reference_frequency)


@pytest.fixture(scope="session")
def cell():
    return VaporCell.cesium_d1(378.15, 0.10)


@pytest.fixture(scope="session")
def response(cell, grid):
    return optical_response(cell, grid)


@pytest.fixture(scope="session")
def center(response):
    return window_center(response)


@pytest.fixture(scope="session")
def sigma_star():
    from fockflow.correlation import sigma_for_visibility

    return sigma_for_visibility(0.53, TAU)


@pytest.fixture(scope="session")
def emitter(sigma_star, center):
    return EmitterModel(tau=TAU, sigma=sigma_star, carrier=center)


# acceptance lines, filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
