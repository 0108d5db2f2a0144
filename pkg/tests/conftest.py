import numpy as np
import pytest

from nstsim import GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gray(values):
    return GrayImage(np.asarray(values, dtype=np.float64))


def white_square(side=32, radius=6):
    """Square of half-width ``radius`` centred on pixel (side/2, side/2).

    Being symmetric about the FFT half-period point, its spectrum is real up
    to a (-1)^k sign, so every phase is 0 or pi.
    """
    u = np.zeros((side, side))
    c = side // 2
    u[c - radius:c + radius + 1, c - radius:c + radius + 1] = 1.0
    return GrayImage(u)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
