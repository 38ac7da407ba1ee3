import numpy as np
import pytest

from hdrlab.core import RadianceFrame, SdrFrame


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def radiance(rng):
    """A 24x32 log-normal radiance frame with a few bright highlights."""
    px = 0.18 * np.exp(rng.standard_normal((24, 32, 3)))
    px[3, 5] = [12.0, 9.0, 14.0]
    return RadianceFrame(px)


@pytest.fixture
def sdr(rng):
    return SdrFrame(rng.integers(0, 256, (24, 32, 3), dtype=np.uint8))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
