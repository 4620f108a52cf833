import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, p, low=0.5, high=2.0):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    cov = (q * rng.uniform(low, high, p)) @ q.T
    return 0.5 * (cov + cov.T)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
