import numpy as np
import pytest
from hypothesis import strategies as st

from endo_capm.equilibrium import MarketParams
from endo_capm.market_structure import dirichlet_weights, sample_constrained_beta

ACCEPTANCE_LINES = []


def random_market(seed, n, beta_bounds=(-2.0, 3.0), r=0.05):
    """Seeded random market: Dirichlet weights, betas projected onto w @ beta = 1."""
    w = dirichlet_weights(n, seed=[seed, 0])
    b = sample_constrained_beta(w, beta_bounds, seed=[seed, 1])
    return MarketParams(w, b, r)


@st.composite
def markets(draw, min_n=2, max_n=12, beta_bounds=(-2.0, 3.0)):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    r = draw(st.sampled_from([0.01, 0.05, 0.2, 1.0]))
    return random_market(seed, n, beta_bounds, r)


@pytest.fixture
def two_asset():
    return MarketParams([0.5, 0.5], [0.5, 1.5], 0.02)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
