import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, N, M, scale=1.0):
    from mcegate import McEState

    z = scale * (rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M)))
    c = rng.standard_normal((N, 4)) + 1j * rng.standard_normal((N, 4))
    return McEState(z, c, rng.uniform(-np.pi, np.pi, N))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
