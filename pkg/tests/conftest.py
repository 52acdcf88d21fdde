import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cylres import Interval, Profile, build_catalog, separable, zero_potential
from cylres.cross_section import Sphere, TwoEnded

settings.register_profile("cylres", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cylres")

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def interval_cs():
    return build_catalog(Interval(np.pi), truncate=64)


@pytest.fixture(scope="session")
def two_ended_cs():
    return build_catalog(TwoEnded(Interval(np.pi)), truncate=24)


@pytest.fixture(scope="session")
def sphere_cs():
    return build_catalog(Sphere(2), n_thresholds=30)


@pytest.fixture(scope="session")
def barrier():
    return Profile.step(4.0)


@pytest.fixture(scope="session")
def barrier_pot(barrier):
    return separable(barrier)


@pytest.fixture(scope="session")
def zero_pot():
    return zero_potential()
