import numpy as np
import pytest

from reggeflow import SplitMix64, build_16cell, build_from_tetrahedra

# lines collected by test_acceptance, echoed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def tri16():
    return build_16cell()


@pytest.fixture(scope="session")
def single_tet():
    return build_from_tetrahedra("ABCD", [("A", "B", "C", "D")])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def smx():
    return SplitMix64(20240517)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
