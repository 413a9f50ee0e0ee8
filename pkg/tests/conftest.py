import math

import numpy as np
import pytest

from frontlab.front import analytic_cubic_front, solve_front
from frontlab.grid import Grid1D, WaveState
from frontlab.potential import make_cubic

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def cubic():
    return make_cubic(0.25)


@pytest.fixture(scope="session")
def front(cubic):
    return solve_front(cubic, 1e-10)


@pytest.fixture(scope="session")
def exact_front():
    return analytic_cubic_front(0.25)


def smoothstep(z):
    """C-infinity transition from 0 (z <= 0) to 1 (z >= 1)."""
    z = np.asarray(z, dtype=float)
    a = np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)
    b = np.where(z < 1, np.exp(-1.0 / np.where(z < 1, 1.0 - z, 1.0)), 0.0)
    return a / (a + b)


def compact_right_state(x_left, x_right, dx):
    """Smooth data equal to 1 for x <= -2 and 0 for x >= 2."""
    g = Grid1D.from_bounds(x_left, x_right, dx)
    return WaveState(g, smoothstep((2.0 - g.x) / 4.0), np.zeros(g.n))


def observed_order(errors, ratio=2.0):
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
