"""Shared fixtures and the acceptance-criterion reporter.

Acceptance tests register one line per criterion through the `criteria`
fixture; the terminal summary prints them in order so a full run ends
with an at-a-glance pass/fail table.
"""

import numpy as np
import pytest

from searchsim.grid import MapConfig, VoxelGrid

_RESULTS = {}


@pytest.fixture(scope="session")
def criteria():
    """Recorder mapping criterion number -> (passed, detail)."""

    class Recorder:
        def record(self, number, passed, detail):
            _RESULTS[number] = (bool(passed), str(detail))

    return Recorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for number in sorted(_RESULTS):
        passed, detail = _RESULTS[number]
        word = "PASS" if passed else "FAIL"
        tw.write_line(f"criterion {number}: {word} - {detail}")


def make_grid(dims=(10, 10, 10), resolution=0.25, origin=(0.0, 0.0, 0.0)):
    return VoxelGrid(origin=origin, resolution=resolution, dims=dims)


@pytest.fixture
def grid10():
    return make_grid()


@pytest.fixture
def mapcfg():
    return MapConfig()


def set_box(grid, lo, hi, state):
    grid.state[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = state


def all_free(grid):
    from searchsim._kernels import FREE
    grid.state[:] = FREE
    return grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
