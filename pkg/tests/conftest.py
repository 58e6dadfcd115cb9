import numpy as np
import pytest

from diagchannels.channels import complex_gaussian

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, d):
    g = complex_gaussian(rng, (d, d))
    return (g + g.conj().T) / 2


def random_psd(rng, d, rank=None):
    g = complex_gaussian(rng, (d, rank or d))
    return g @ g.conj().T


def random_density(rng, d, rank=None):
    m = random_psd(rng, d, rank)
    return m / np.trace(m).real
