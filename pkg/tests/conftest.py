import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from hornopt import model

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def paper_params():
    return model.PhysicalParams(rho0=1.0, c=340.0, f0=440.0, L=0.772)


def point_objects(point):
    """Model-layer objects for a sample produced by ``oracles.random_point``."""
    params = model.PhysicalParams(rho0=point["rho0"])
    harmonics = model.HarmonicSpec(point["multipliers"], point["k0"])
    return params, harmonics


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
