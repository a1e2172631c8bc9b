import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


class ForcedCoins:
    """Stand-in generator whose uniform draws keep exactly the given indices."""

    def __init__(self, keep):
        self.keep = set(int(i) for i in keep)

    def random(self, n):
        return np.array([0.0 if i in self.keep else 1.0 for i in range(n)])


@pytest.fixture
def forced():
    return ForcedCoins


def random_symmetric(rng, n, bounded=True):
    a = rng.uniform(-1, 1, size=(n, n)) if bounded else rng.standard_normal((n, n))
    return np.triu(a) + np.triu(a, 1).T


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
