"""Scoring operations for And-Or graph nodes.

All values live in "score space" (higher is better) except squared deformation
residuals, which are non-negative and enter scores through non-positive pair
weights. A shared +inf sentinel marks the forbidden case of two parts landing
on the exact same placement.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .geometry import Region
from .nodes import LatentChild, PairRelation, PartNode, SEMANTIC, LATENT

CLASH = math.inf
"""Sentinel deformation value for two parts claiming one placement."""

INVISIBLE = "invisible"
"""Branch label returned by ``score_or`` when the invisible alternative wins."""


def score_terminal(template: np.ndarray, feature: np.ndarray) -> float:
    """Inner product of a terminal template with an observed feature vector."""
    template = np.asarray(template, dtype=float)
    feature = np.asarray(feature, dtype=float)
    if template.shape != feature.shape:
        raise ValueError(f"template shape {template.shape} does not match feature shape {feature.shape}")
    return float(np.dot(template, feature))


def score_or(child_scores: Sequence[float], invisible_penalty: float | None = None):
    """Pick the best alternative; returns ``(score, branch)``.

    ``branch`` is the winning child index, or ``INVISIBLE`` when the penalty
    strictly beats every visible child. Ties prefer the lowest-index visible
    child so identical inputs always pick the same branch.
    """
    if len(child_scores) == 0 and invisible_penalty is None:
        raise ValueError("OR node has no children and no invisible alternative")
    best_idx = -1
    best = -math.inf
    for i, s in enumerate(child_scores):
        if s > best:
            best = s
            best_idx = i
    if invisible_penalty is not None and invisible_penalty > best:
        return float(invisible_penalty), INVISIBLE
    return float(best), best_idx


def pairwise_geometry(a: Region, b: Region) -> np.ndarray:
    """Four-component relative geometry between two placements.

    Components: log scale ratio, unit offset direction (two components), and
    the log of the mean scale over the center distance. The scale mean is
    arithmetic. Raises on coincident centers where the direction is undefined.
    """
    dx = a.cx - b.cx
    dy = a.cy - b.cy
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise ValueError("pairwise geometry is undefined for coincident centers")
    mean_scale = (a.scale + b.scale) / 2.0
    return np.array(
        [
            math.log(a.scale / b.scale),
            dx / dist,
            dy / dist,
            math.log(mean_scale / dist),
        ],
        dtype=float,
    )


def score_deformation(pair: PairRelation, region_a: Region | None, region_b: Region | None) -> float:
    """Deformation value for one neighbor pair.

    Returns the stored miss penalty when either member is invisible, the CLASH
    sentinel when the members claim the same placement or stack on the same
    center (two parts cannot occupy one spot), and otherwise the squared
    residual against the pair's mean geometry.
    """
    if region_a is None or region_b is None:
        return float(pair.miss_penalty)
    if region_a.same_placement(region_b) or region_a.center() == region_b.center():
        return CLASH
    if pair.mean_geometry is None:
        raise ValueError(f"pair ({pair.a}, {pair.b}) has no mean geometry")
    observed = pairwise_geometry(region_a, region_b)
    diff = np.asarray(pair.mean_geometry, dtype=float) - observed
    return float(np.dot(diff, diff))


def score_latent_child(child: LatentChild, feature: np.ndarray) -> float:
    """Appearance score of one latent alternative at an observed feature."""
    mean = np.asarray(child.mean_appearance, dtype=float)
    feature = np.asarray(feature, dtype=float)
    if mean.shape != feature.shape:
        raise ValueError(f"appearance shape {mean.shape} does not match feature shape {feature.shape}")
    diff = mean - feature
    return float(child.norm_scale * np.dot(diff, diff) + child.norm_offset)


def score_part_child(part: PartNode, child, observation) -> float:
    """Score one layer-5 alternative of a part.

    For latent parts ``child`` is a ``LatentChild`` and ``observation`` the
    pooled feature vector. For semantic parts ``child`` is the literal
    ``"visible"`` with the raw classifier margin as observation, or
    ``"invisible"`` (observation ignored) which returns the part penalty.
    """
    if isinstance(child, LatentChild):
        if part.kind != LATENT:
            raise ValueError(f"latent alternative offered to a {part.kind} part")
        return score_latent_child(child, observation)
    if child == "visible":
        if part.kind != SEMANTIC:
            raise ValueError(f"classifier margin offered to a {part.kind} part")
        return float(part.margin_scale * float(observation) + part.margin_offset)
    if child == INVISIBLE:
        if part.invisible_penalty is None:
            raise ValueError("part has no invisible alternative")
        return float(part.invisible_penalty)
    raise ValueError(f"unknown child {child!r}")


def score_and(
    node,
    child_scores: Sequence[float],
    child_regions: Sequence[Region | None],
    appearance_score: float | None = None,
) -> float:
    """Normalized AND-node score: children plus weighted pairwise deformations.

    ``child_regions`` aligns with ``node``'s children; ``None`` marks an
    invisible child, whose pairs then contribute their miss penalties. Returns
    -inf when any pair hits the CLASH sentinel.
    """
    n = len(child_scores)
    if len(child_regions) != n:
        raise ValueError(f"{n} child scores but {len(child_regions)} regions")
    total = float(sum(child_scores))
    if getattr(node, "has_global_appearance", False):
        if appearance_score is None:
            raise ValueError("node expects a global appearance score")
        total += float(appearance_score)
    for pair in node.pairs:
        if pair.a >= n or pair.b >= n:
            raise ValueError(f"pair ({pair.a}, {pair.b}) outside the {n} children")
        value = score_deformation(pair, child_regions[pair.a], child_regions[pair.b])
        if math.isinf(value):
            return -math.inf
        total += pair.weight * value
    return float(node.norm_scale * total + node.norm_offset)


def calibrate_normalization(samples: Sequence[float]) -> tuple[float, float]:
    """Fit ``(scale, offset)`` so the samples standardize to mean 0, variance 1.

    Uses the population standard deviation, so transforming the calibration
    input itself yields exactly zero mean and unit variance.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size < 2:
        raise ValueError(f"calibration needs at least two samples, got {arr.size}")
    mu = float(arr.mean())
    sigma = float(arr.std())
    if sigma == 0.0:
        raise ValueError("calibration samples have zero variance")
    return (1.0 / sigma, -mu / sigma)


def standardize(values, scale: float, offset: float):
    """Apply a fitted normalization to raw score samples."""
    return np.asarray(values, dtype=float) * scale + offset
