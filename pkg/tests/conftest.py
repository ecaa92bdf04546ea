import numpy as np
import pytest

from signorini_lab.catalog import HalfPlaneSolution, QuadraticProfile
from signorini_lab.geometry import Grid
from signorini_lab.solver import SignoriniProblem, solve

# lines printed by the acceptance tests, echoed once in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid2d():
    return Grid(1, 129)


@pytest.fixture(scope="session")
def regular_solve(grid2d):
    return solve(SignoriniProblem(grid2d, HalfPlaneSolution(1.5)))


@pytest.fixture(scope="session")
def quadratic_solve(grid2d):
    return solve(SignoriniProblem(grid2d, QuadraticProfile(np.eye(1))))
