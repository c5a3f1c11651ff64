import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ddassign.dataset import kernel_pair, simulate_experiments
from ddassign.oracle import batch_reactor

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion():
    def record(label, ok, detail=""):
        line = f"ACCEPTANCE {label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        print(line)
        _CRITERIA.append((label, ok, detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())


@pytest.fixture(scope="session")
def reactor():
    return batch_reactor().model


@pytest.fixture(scope="session")
def reactor_data(reactor):
    """Example data set: T = 10, N = mT + n = 24 experiments."""
    return simulate_experiments(reactor, T=10, N=24, seed=1)


@pytest.fixture(scope="session")
def reactor_kp(reactor_data):
    return kernel_pair(reactor_data)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
