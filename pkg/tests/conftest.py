import numpy as np
import pytest

from fheat.closedform import SolitonKernel
from fheat.geometry import WeightedSpace
from fheat.profiles import WeightProfile

ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def euclid_line():
    return WeightedSpace(WeightProfile.constant(0.0), L=12)


@pytest.fixture(scope="session")
def steady_line():
    return WeightedSpace(WeightProfile.linear(1), L=12)


@pytest.fixture(scope="session")
def steady_kernel():
    return SolitonKernel("steady", 1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {line}")
