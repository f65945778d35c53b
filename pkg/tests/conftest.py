import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from moentangle.params import build_dynamics, is_stable, table1

settings.register_profile(
    "default",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

TWO_PI = 2 * math.pi


@st.composite
def stable_params(draw, n_max=3.0):
    """Reference-device configurations that are dynamically stable."""
    C = draw(st.floats(0.0, 3.0))
    R = draw(st.floats(0.1, 3.0))
    n = draw(st.floats(0.0, n_max))
    p = table1(C, R, n)
    from hypothesis import assume

    assume(is_stable(build_dynamics(p)))
    return p


@pytest.fixture(scope="session")
def g2_system():
    # kappa_e,c / kappa_e,i = 20 on the reference device
    return build_dynamics(table1(1.0, 0.2625, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
