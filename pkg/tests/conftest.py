import numpy as np
import pytest

from beamalign.geometry import SceneConfig


@pytest.fixture
def stock_scene():
    """The 201-antenna, 28 GHz, 15 m broadside scene."""
    return SceneConfig()


@pytest.fixture
def small_scene():
    """A cheap near-field scene with a non-trivial truncated index set."""
    return SceneConfig(bs_antennas=31, ue_antennas=31, distance=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
