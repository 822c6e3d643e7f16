import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gdelast.mesh import generate_unit_square

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tri4():
    return generate_unit_square(4, "tri")


@pytest.fixture(scope="session")
def quad4():
    return generate_unit_square(4, "quad")


CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
