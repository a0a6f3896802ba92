import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repo", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("repo")


def all_points(n, K=None):
    """Every 0/1 vector of length n, optionally with exactly K ones, lexicographic."""
    pts = [np.array(p, dtype=np.int8) for p in itertools.product((0, 1), repeat=n)]
    if K is not None:
        pts = [p for p in pts if p.sum() == K]
    return np.array(pts)


def direct_gain(value, x, d):
    return float(value(np.asarray(x + d)[None, :])[0] - value(np.asarray(x)[None, :])[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE: dict = {}


def record(criterion: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {criterion} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
