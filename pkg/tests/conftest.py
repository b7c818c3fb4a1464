import numpy as np
import pytest

from aogqa.features import GridFeatureExtractor
from aogqa.world import WorldConfig, generate_world


@pytest.fixture(scope="session")
def extractor():
    return GridFeatureExtractor()


@pytest.fixture(scope="session")
def tiny_world():
    """One category, one arrangement: the cheapest world that still renders."""
    return generate_world(
        WorldConfig(categories=1, poses_per_category=1, pool_size=10, probe_size=3, seed=3)
    )


@pytest.fixture(scope="session")
def paired_world():
    """Two categories, two arrangements each, small pools."""
    return generate_world(
        WorldConfig(categories=2, poses_per_category=2, pool_size=12, probe_size=2, seed=7)
    )


@pytest.fixture(scope="session")
def backgrounds(tiny_world):
    rng = np.random.default_rng(11)
    return [tiny_world.render_background(rng) for _ in range(6)]
