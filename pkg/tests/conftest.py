import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from formchoice import geometry


@pytest.fixture(scope="session")
def norm_stats():
    return geometry.default_normalization()


@pytest.fixture(scope="session")
def feature_bank(norm_stats):
    """Normalized features of 64 fixed random designs."""
    rng = np.random.default_rng(2024)
    designs = rng.random((64, geometry.N_VARIABLES))
    return designs, norm_stats.transform(geometry.features_batch(designs))
