import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from serofoi.foi import AgeModulatedForce, AgeModulatedParams, ToyForce  # noqa: E402

VARICELLA_THETA = (1.2566370614359172, 1.0, 0.5, 0.08, 0.11, 0.06, 0.03)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy():
    return ToyForce(np.pi)


@pytest.fixture
def varicella():
    return AgeModulatedForce((0.0, 3.0, 7.0, 15.0, 20.0),
                             AgeModulatedParams.from_array(VARICELLA_THETA))
