import numpy as np
import pytest

from wavend.meshgeom import DomainSpec, build_dyadic_hierarchy
from wavend.wavelet import build_basis


@pytest.fixture(scope="session")
def interval_basis():
    """Haar basis on [0, 1] with 64 leaves."""
    return build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 6), 1)


@pytest.fixture(scope="session")
def square_basis():
    """Haar basis on the unit square with 64 leaves."""
    return build_basis(build_dyadic_hierarchy(DomainSpec.square(1.0), 3), 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
