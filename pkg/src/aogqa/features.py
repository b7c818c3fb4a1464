"""Feature extraction from synthetic scene grids.

Scenes are (channels, height, width) float arrays. A region's feature vector
is the per-channel mean over its raster cells with the raster height/width
ratio appended, giving ``channels + 1`` dimensions. The extractor is the
pluggable boundary between scene storage and everything that scores features.
"""

from __future__ import annotations

import numpy as np

from .geometry import Region, raster_rect


class GridFeatureExtractor:
    """Pools appearance channels over regions of a feature grid."""

    def feature_dim(self, grid: np.ndarray) -> int:
        return int(grid.shape[0]) + 1

    def __call__(self, grid: np.ndarray, region: Region) -> np.ndarray:
        """Feature vector for one region; raises if the raster is empty."""
        channels, height, width = grid.shape
        x0, y0, x1, y1 = raster_rect(region.box, height, width)
        if x1 <= x0 or y1 <= y0:
            raise ValueError(f"region {region} rasterizes to nothing on a {height}x{width} grid")
        pooled = grid[:, y0:y1, x0:x1].reshape(channels, -1).mean(axis=1)
        ratio = (y1 - y0) / (x1 - x0)
        return np.concatenate([pooled, [ratio]])

    def sweep(self, grid: np.ndarray, box_w: int, box_h: int) -> tuple[np.ndarray, np.ndarray]:
        """Features of every fully-inside ``box_w`` x ``box_h`` window.

        Returns ``(centers, features)`` where ``centers`` is (N, 2) float
        ``(cx, cy)`` positions and ``features`` is (N, channels + 1). Windows
        enumerate top-left corners row by row, so ordering is deterministic.
        Uses a summed-area table; cost is independent of the window size.
        """
        channels, height, width = grid.shape
        if box_w < 1 or box_h < 1 or box_w > width or box_h > height:
            return np.zeros((0, 2)), np.zeros((0, channels + 1))
        table = np.zeros((channels, height + 1, width + 1))
        table[:, 1:, 1:] = grid.cumsum(axis=1).cumsum(axis=2)
        rows = height - box_h + 1
        cols = width - box_w + 1
        sums = (
            table[:, box_h:, box_w:]
            - table[:, :rows, box_w:]
            - table[:, box_h:, :cols]
            + table[:, :rows, :cols]
        )
        means = sums.reshape(channels, -1).T / float(box_w * box_h)
        n = means.shape[0]
        ratio = np.full((n, 1), box_h / box_w)
        features = np.hstack([means, ratio])
        ys, xs = np.meshgrid(
            np.arange(height - box_h + 1), np.arange(width - box_w + 1), indexing="ij"
        )
        centers = np.stack([xs.ravel() + box_w / 2.0, ys.ravel() + box_h / 2.0], axis=1)
        return centers, features
