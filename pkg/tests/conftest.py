import numpy as np
import pytest
from hypothesis import settings

from matchforge.core import Sample

settings.register_profile("matchforge", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("matchforge")


def make_sample(X, t, y=None, names=None):
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    y = np.zeros(len(t)) if y is None else np.asarray(y, dtype=float)
    return Sample(X, t, y, names)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")
