import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from herder.problem import MkpState, random_mkp  # noqa: E402


@pytest.fixture
def tiny_state() -> MkpState:
    return MkpState(0, [10, 20, 30], [[5, 4, 3]], [7])


@pytest.fixture
def small_state() -> MkpState:
    return random_mkp(30, 5, seed=3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
