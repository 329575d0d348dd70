import time

import pytest

from salvoguide.scenario import example1, example2
from salvoguide.sim import run_scenario

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
# wall-clock seconds of the shared preset runs
RUNTIMES = {}


def _timed(name, cfg):
    start = time.perf_counter()
    trace = run_scenario(cfg)
    RUNTIMES[name] = time.perf_counter() - start
    return trace


@pytest.fixture(scope="session")
def ex1_trace():
    return _timed("example1", example1())


@pytest.fixture(scope="session")
def ex2_trace():
    return _timed("example2", example2())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"AC{key:<3} {'PASS' if ok else 'FAIL'}  {detail}")


def small_config(**changes):
    """Example-1 geometry over a short horizon with generous terminals (fast, never singular)."""
    kw = dict(tf=3.0, dt=1e-2, Rf=[1.0] * 4, Vlamf=[0.05] * 4, kill_radius=1.0, name="small")
    kw.update(changes)
    return example1(**kw)
