import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracschwarz.mesh import build_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def mesh8():
    return build_mesh([[0.0, 2.0], [0.0, 2.0]], 8)


@pytest.fixture(scope="session")
def mesh16():
    return build_mesh([[0.0, 2.0], [0.0, 2.0]], 16)
