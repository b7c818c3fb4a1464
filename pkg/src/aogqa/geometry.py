"""Center-and-scale regions and the axis-aligned boxes derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

Box = tuple[float, float, float, float]  # (x0, y0, x1, y1)


def iround(value: float) -> int:
    """Round half away from zero; rasters must not depend on banker's rounding."""
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class Region:
    """One part placement: 2D center plus scale, with a stored width/height aspect.

    The derived box has area ``scale ** 2`` and width/height ratio ``aspect``, so
    ``scale`` stays comparable across parts with different shapes.
    """

    cx: float
    cy: float
    scale: float
    aspect: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0.0:
            raise ValueError(f"region scale must be positive, got {self.scale}")
        if self.aspect <= 0.0:
            raise ValueError(f"region aspect must be positive, got {self.aspect}")

    @property
    def width(self) -> float:
        return self.scale * math.sqrt(self.aspect)

    @property
    def height(self) -> float:
        return self.scale / math.sqrt(self.aspect)

    @property
    def box(self) -> Box:
        half_w = self.width / 2.0
        half_h = self.height / 2.0
        return (self.cx - half_w, self.cy - half_h, self.cx + half_w, self.cy + half_h)

    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    def same_placement(self, other: "Region") -> bool:
        """Exact placement identity, used by the deformation sentinel."""
        return (self.cx, self.cy, self.scale, self.aspect) == (
            other.cx,
            other.cy,
            other.scale,
            other.aspect,
        )


def region_from_box(box: Box) -> Region:
    """Invert the box derivation; raises on degenerate boxes."""
    x0, y0, x1, y1 = box
    width = x1 - x0
    height = y1 - y0
    if width <= 0.0 or height <= 0.0:
        raise ValueError(f"degenerate box {box}")
    return Region(
        cx=(x0 + x1) / 2.0,
        cy=(y0 + y1) / 2.0,
        scale=math.sqrt(width * height),
        aspect=width / height,
    )


def raster_rect(box: Box, grid_height: int, grid_width: int) -> tuple[int, int, int, int]:
    """Integer cell rectangle (x0, y0, x1, y1) covered by ``box``, clipped to the grid.

    The same rule is used when scenes are rendered and when features are pooled,
    so a box survives a render/extract round trip unchanged.
    """
    x0, y0, x1, y1 = box
    rx0 = max(0, iround(x0))
    ry0 = max(0, iround(y0))
    rx1 = min(grid_width, iround(x1))
    ry1 = min(grid_height, iround(y1))
    return rx0, ry0, rx1, ry1


def split_region(region: Region, axis: int) -> tuple[Region, Region]:
    """Halve a region along ``axis`` (0: left/right, 1: top/bottom)."""
    x0, y0, x1, y1 = region.box
    if axis == 0:
        mid = (x0 + x1) / 2.0
        return region_from_box((x0, y0, mid, y1)), region_from_box((mid, y0, x1, y1))
    mid = (y0 + y1) / 2.0
    return region_from_box((x0, y0, x1, mid)), region_from_box((x0, mid, x1, y1))


def box_area(box: Box) -> float:
    x0, y0, x1, y1 = box
    return max(0.0, x1 - x0) * max(0.0, y1 - y0)


def box_center(box: Box) -> tuple[float, float]:
    x0, y0, x1, y1 = box
    return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
