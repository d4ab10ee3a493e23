import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from circflow import FlowParams, GridSpec, build_background, build_grid
from circflow.operators import set_num_threads

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _single_thread():
    set_num_threads(1)
    yield
    set_num_threads(1)


@pytest.fixture
def params():
    return FlowParams()


@pytest.fixture
def small_grid():
    return build_grid(GridSpec(n_r=32, n_z=32))


@pytest.fixture
def small_bg(small_grid, params):
    return build_background(small_grid, params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
