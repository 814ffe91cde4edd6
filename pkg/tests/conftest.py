"""Shared fixtures: full bundled-scenario runs are computed once per session."""

import pytest

from ftconsensus.io import load_scenario
from ftconsensus.sim import run


def _run(name, **overrides):
    cfg = load_scenario(name)
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    return cfg, run(cfg)


@pytest.fixture(scope="session")
def faultfree_run():
    return _run("paper_baseline_faultfree")


@pytest.fixture(scope="session")
def process_run():
    return _run("paper_process_fault")


@pytest.fixture(scope="session")
def noftc_run():
    return _run("paper_process_fault_noftc")


@pytest.fixture(scope="session")
def actuator_run():
    return _run("paper_actuator_fault")


@pytest.fixture
def short_process_cfg():
    """Process-fault scenario cut to 6 s so the fault fires and is isolated."""
    return load_scenario("paper_process_fault").with_overrides(t_end=6.0)


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the acceptance report."""
    def record(number, passed, detail):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
