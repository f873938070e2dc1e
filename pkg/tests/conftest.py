import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ilwlab",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ilwlab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_bandlimited(grid, rng, m_max, decay=1.0, real=True):
    """Random mean-zero field with modes ``1 <= |m| <= m_max``."""
    from ilwlab.grid import Field

    c = np.zeros(grid.n, complex)
    m = np.arange(1, m_max + 1)
    c[m] = (rng.normal(size=m.size) + 1j * rng.normal(size=m.size)) / (1.0 + m / 8.0) ** decay
    if real:
        c[-m] = np.conj(c[m])
    else:
        c[-m] = (rng.normal(size=m.size) + 1j * rng.normal(size=m.size)) / (1.0 + m / 8.0) ** decay
    return Field.from_spectrum(grid, c, real=real)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
