import numpy as np
import pytest

from besovlab.grid import GridSpec, assemble_laplacian, build_domain
from besovlab.partition import build_partition
from besovlab.semigroup import dyadic_interval
from besovlab.spectral import decompose


def make(spec):
    dec = decompose(assemble_laplacian(build_domain(spec)))
    return dec, build_partition(dec)


@pytest.fixture(scope="session")
def line63():
    return make(GridSpec.interval(63))


@pytest.fixture(scope="session")
def line255():
    return make(GridSpec.interval(255))


@pytest.fixture(scope="session")
def square12():
    return make(GridSpec.square(12))


@pytest.fixture(scope="session")
def dyadic127():
    """Interval of 127 sites whose mode 16 sits exactly at sqrt(lambda) = 16."""
    return make(dyadic_interval(127, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
