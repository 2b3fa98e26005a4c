import numpy as np
import pytest

from sidelink_sim.linkadapt import McsTable
from sidelink_sim.waveform import Numerology


@pytest.fixture(scope="session")
def num():
    return Numerology()


@pytest.fixture(scope="session")
def table():
    """The shipped, calibrated MCS table."""
    return McsTable.calibrated_default()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
