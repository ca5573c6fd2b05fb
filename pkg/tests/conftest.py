import numpy as np
import pytest

from rekgs.problems import generate_problem
from rekgs.sampling import problem_rng

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def make_problem():
    cache = {}

    def factory(m, n, r, sigma1=2.0, sigmar=1.0, consistent=True, seed=0, resid_scale=None):
        key = (m, n, r, sigma1, sigmar, consistent, seed, resid_scale)
        if key not in cache:
            cache[key] = generate_problem(m, n, r, sigma1, sigmar, consistent=consistent,
                                          rng=problem_rng(seed), resid_scale=resid_scale)
        return cache[key]

    return factory
