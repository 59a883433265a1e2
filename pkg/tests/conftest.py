import numpy as np
import pytest

SEED = 20240611


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
