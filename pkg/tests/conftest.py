import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ksumindex import Instance, preprocess

settings.register_profile(
    "default", deadline=None, max_examples=100,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_instance():
    return Instance.random(16, 3, np.random.default_rng(3))


@pytest.fixture(scope="session")
def small_index(small_instance):
    return preprocess(small_instance, 0.75, "general", seed=5)


@pytest.fixture(scope="session")
def mid_index():
    return preprocess(Instance.random(64, 3, np.random.default_rng(11)), 0.75, "general", seed=1)


# acceptance criteria report: one line each, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
