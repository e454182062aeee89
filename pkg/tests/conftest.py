import time

import pytest

from etconsensus import load_config, run

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def golden_cfg():
    return load_config("paper_sec5")


@pytest.fixture(scope="session")
def golden_run(golden_cfg):
    """The full 20 s event-triggered golden run, weights recorded for replay."""
    t0 = time.perf_counter()
    res = run(golden_cfg, record_weights=True)
    res.wall_time = time.perf_counter() - t0
    return res


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
