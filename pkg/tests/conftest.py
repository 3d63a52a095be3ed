import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lorentzlab.fncore import PiecewiseFn

settings.register_profile("lab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


def random_step(rng, n=None, lo=-4.0, hi=4.0, signed=True, tail="zero"):
    n = n or int(rng.integers(1, 9))
    bp = np.sort(rng.choice(np.linspace(lo, hi, 257), n + 1, replace=False))
    vals = rng.uniform(-3, 3, n) if signed else rng.uniform(0.1, 3, n)
    # repeated levels exercise tie handling
    if n > 2:
        vals[1] = vals[0]
    return PiecewiseFn(bp, vals, tail=tail)


@st.composite
def step_functions(draw, max_cells=6, signed=True):
    seed = draw(st.integers(0, 2 ** 31 - 1))
    n = draw(st.integers(1, max_cells))
    return random_step(np.random.default_rng(seed), n, signed=signed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
