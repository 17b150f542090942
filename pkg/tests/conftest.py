import warnings

import pytest

from eprtwin.biphoton import (
    MOMENTUM,
    POSITION,
    DoubleGaussianParams,
    fourier_pair,
    make_double_gaussian,
    oracle_axis,
)

# Lines recorded by the acceptance suite, echoed after the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bbo_params():
    return DoubleGaussianParams.type1_bbo()


@pytest.fixture(scope="session")
def bbo_states(bbo_params):
    """Position and momentum amplitudes on the 2048-point oracle grids."""
    x_axis = oracle_axis(bbo_params, 2048, POSITION)
    p_axis = x_axis.conjugate()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        psi_x = make_double_gaussian(bbo_params, x_axis, x_axis, min_samples=1.0)
        psi_p = make_double_gaussian(bbo_params, p_axis, p_axis, min_samples=1.0)
    return {POSITION: psi_x, MOMENTUM: psi_p}


@pytest.fixture(scope="session")
def bbo_transformed(bbo_states):
    return fourier_pair(bbo_states[MOMENTUM])
