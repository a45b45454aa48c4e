import numpy as np
import pytest

from confacq.data_model import IHDP_LIKE_COLUMNS, synthesize_covariates


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def cohort():
    return synthesize_covariates(400, IHDP_LIKE_COLUMNS, seed=7)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
