import numpy as np
import pytest

from ionlattice.model import ChainModel
from ionlattice.statics import relax_from_scratch, sweep_power


@pytest.fixture(scope="session")
def ref_model():
    return ChainModel.reference(35)


@pytest.fixture(scope="session")
def ref_base(ref_model):
    return relax_from_scratch(ref_model)


@pytest.fixture(scope="session")
def ref_sweep(ref_model, ref_base):
    # 10 mW grid from the bare chain to 2 W
    grid = np.round(np.arange(0, 2.0 + 1e-9, 0.01), 10)
    return sweep_power(ref_base, ref_model, grid)


def power_index(sweep, p):
    return int(np.argmin(np.abs(sweep.powers - p)))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.pytest_terminal_summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
