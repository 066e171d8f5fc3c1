import math
import warnings

import pytest
from hypothesis import HealthCheck, settings

from mmwave_d2d.config import table1_scenario

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_alpha_warning():
    # the reference scenario has alpha_L = 2 on purpose
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="alpha_L = 2")
        yield


@pytest.fixture
def cfg():
    return table1_scenario()


@pytest.fixture
def cfg_m2():
    return table1_scenario(nakagami_m=2)


TWO_PI = 2 * math.pi


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(name: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
