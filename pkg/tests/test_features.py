import numpy as np
import pytest

from aogqa.features import GridFeatureExtractor
from aogqa.geometry import Region, raster_rect


def test_feature_dim_is_channels_plus_ratio():
    ex = GridFeatureExtractor()
    grid = np.zeros((5, 8, 8))
    assert ex.feature_dim(grid) == 6


def test_region_feature_hand_computed():
    ex = GridFeatureExtractor()
    grid = np.zeros((2, 6, 6))
    grid[0, 1:3, 1:4] = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    grid[1, 1:3, 1:4] = 2.0
    region = Region(cx=2.5, cy=2.0, scale=np.sqrt(6.0), aspect=1.5)
    assert raster_rect(region.box, 6, 6) == (1, 1, 4, 3)
    feat = ex(grid, region)
    assert feat == pytest.approx([3.5, 2.0, 2.0 / 3.0])


def test_empty_raster_raises():
    ex = GridFeatureExtractor()
    grid = np.zeros((1, 4, 4))
    outside = Region(cx=-10.0, cy=-10.0, scale=1.0)
    with pytest.raises(ValueError):
        ex(grid, outside)


def test_sweep_matches_per_region_extraction():
    rng = np.random.default_rng(2)
    grid = rng.normal(size=(3, 9, 7))
    ex = GridFeatureExtractor()
    centers, feats = ex.sweep(grid, box_w=3, box_h=2)
    assert centers.shape == (8 * 5, 2)
    assert feats.shape == (8 * 5, 4)
    for center, feat in zip(centers, feats):
        region = Region(cx=center[0], cy=center[1], scale=np.sqrt(6.0), aspect=1.5)
        assert ex(grid, region) == pytest.approx(feat, abs=1e-9)


def test_sweep_window_larger_than_grid_is_empty():
    ex = GridFeatureExtractor()
    grid = np.zeros((2, 4, 4))
    centers, feats = ex.sweep(grid, box_w=5, box_h=2)
    assert centers.shape == (0, 2)
    assert feats.shape == (0, 3)


def test_sweep_ordering_deterministic():
    rng = np.random.default_rng(3)
    grid = rng.normal(size=(1, 5, 5))
    ex = GridFeatureExtractor()
    c1, f1 = ex.sweep(grid, 2, 2)
    c2, f2 = ex.sweep(grid, 2, 2)
    assert np.array_equal(c1, c2)
    assert np.array_equal(f1, f2)
    # row-major corner enumeration
    assert c1[0] == pytest.approx([1.0, 1.0])
    assert c1[1] == pytest.approx([2.0, 1.0])
