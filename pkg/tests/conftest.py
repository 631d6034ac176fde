"""Shared strategies and helpers for the test suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from augustin.core_model import Channel, Prob

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")

ORDERS = [0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0]


def random_prob(rng: np.random.Generator, n: int, conc: float = 1.0) -> Prob:
    return Prob(rng.dirichlet(np.full(n, conc)))


def random_channel(rng: np.random.Generator, nx: int, ny: int, conc: float = 1.0) -> Channel:
    return Channel(rng.dirichlet(np.full(ny, conc), nx))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
orders = st.sampled_from(ORDERS)
sizes = st.integers(min_value=2, max_value=6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict[int, bool] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_properties.py" in report.nodeid and name.startswith("test_"):
        k = 7
    elif "test_acceptance.py" in report.nodeid and name.startswith("test_criterion_"):
        k = int(name.split("_")[2])
    else:
        return
    if report.when == "call" or report.failed:
        _CRITERIA[k] = _CRITERIA.get(k, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if _CRITERIA[k] else 'FAIL'}")
