import numpy as np
import pytest

from distpsz.plants import SynthRirSpec, synth_plant_set

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)


@pytest.fixture(scope="session")
def small_plants():
    """Four nodes, 16-tap plants; stable with mu around 0.01."""
    return synth_plant_set(SynthRirSpec(J=16, direct_delay_range=(1, 6)), 4, 4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
