"""Shared fixtures: the K=10 benchmark put problem and small grids/priors
sized for fast unit tests."""
import numpy as np
import pytest

import equistop as eq

# one "criterion NN <name>: PASS|FAIL" line per acceptance criterion,
# appended by the acceptance suite and printed in the terminal summary
CRITERION_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_RESULTS:
            terminalreporter.write_line(line)


STRIKE = 10.0
DISCOUNT = 0.05
SIGMA_BAND = (0.2, 0.4)
ALPHA = 0.5

# frozen closed-form values for the benchmark problem
A_STAR = 6.097560975609754
M1 = 2.4999999999999996
M2 = 0.6249999999999999
HIT_8_6_S02 = 0.48713928962874686   # (6/8)^(2*0.05/0.04)
LAMBDA_8_6 = 2.645150979324686      # 4*(0.5*0.75^2.5 + 0.5*0.75^0.625)


@pytest.fixture(scope="session")
def problem():
    return eq.PutGbmProblem(STRIKE, DISCOUNT, SIGMA_BAND, ALPHA)


@pytest.fixture(scope="session")
def objective():
    return eq.Objective.put(STRIKE, DISCOUNT, ALPHA)


@pytest.fixture(scope="session")
def priors():
    return eq.PriorFamily.gbm_volatility_band(DISCOUNT, *SIGMA_BAND, 9)


@pytest.fixture(scope="session")
def grid():
    # 500 points on [K/100, 10K], enough to test mechanics quickly
    return eq.build_grid(eq.StateInterval(0.0), 500, (0.1, 100.0))
