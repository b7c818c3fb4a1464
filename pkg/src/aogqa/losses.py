"""Loss terms the storyline selector trades against annotation cost."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import GridFeatureExtractor
from .geometry import Box, region_from_box
from .inference import detect_best_object, score_pose_on_grid
from .metrics import iou
from .nodes import SEMANTIC, Aog, PartNode, PoseNode
from .scoring import score_part_child


@dataclass
class AnnotatedScene:
    """A scene with human-confirmed category and part boxes."""

    scene_id: str
    grid: np.ndarray
    category: str
    object_box: Box
    part_boxes: dict[str, Box] = field(default_factory=dict)


def generative_loss(
    pose: PoseNode,
    grids: list[np.ndarray],
    budget: int = 4,
    extractor: GridFeatureExtractor | None = None,
) -> float:
    """Negated mean pose score over the pose's confirmed samples."""
    if not grids:
        raise ValueError("generative loss needs a nonempty pool")
    extractor = extractor or GridFeatureExtractor()
    scores = [score_pose_on_grid(pose, g, budget=budget, extractor=extractor).score for g in grids]
    return -float(np.mean(scores))


def category_hinge(
    delta: float, predicted_score: float, true_score: float
) -> float:
    return max(0.0, delta + predicted_score - true_score)


def part_score_at(
    part: PartNode, grid: np.ndarray, box: Box, extractor: GridFeatureExtractor
) -> float:
    """Visible score for the part placed exactly at the given box."""
    feature = extractor(grid, region_from_box(box))
    if part.kind == SEMANTIC:
        if part.classifier is None:
            raise ValueError(f"semantic part {part.name!r} has no classifier yet")
        margin = float(feature @ np.asarray(part.classifier.weights, dtype=float) + part.classifier.bias)
        return score_part_child(part, "visible", margin)
    best = None
    for child in part.children:
        value = score_part_child(part, child, feature)
        if best is None or value > best:
            best = value
    if best is None:
        raise ValueError(f"part {part.name!r} has no children to score")
    return best


def discriminative_loss(
    aog: Aog,
    labeled: list,
    v_category: float = 1.0,
    v_part: float = 1.0,
    budget: int = 4,
    extractor: GridFeatureExtractor | None = None,
) -> tuple[float, float]:
    """Category hinge and part-localization hinge over annotated scenes.

    ``labeled`` pairs each scene grid with its truth: true category and
    ground-truth boxes for (a subset of) semantic parts. The category term
    compares the predicted category's score against the true one with a 0/1
    separation margin; the part term compares each predicted placement
    against its annotation with a 1-IoU margin.
    """
    if not labeled:
        raise ValueError("discriminative loss needs annotated scenes")
    extractor = extractor or GridFeatureExtractor()
    cate_terms: list[float] = []
    part_terms: list[float] = []
    for scene in labeled:
        grid = scene.grid
        truth_category = scene.category
        parse = detect_best_object(aog, grid, scene.object_box, budget=budget, extractor=extractor)
        by_category: dict[str, float] = {}
        for pose_key, score in parse.pose_scores.items():
            cat = pose_key.split("/")[0]
            if cat not in by_category or score > by_category[cat]:
                by_category[cat] = score
        if truth_category not in by_category:
            raise ValueError(f"model has no arrangement for category {truth_category!r}")
        true_score = by_category[truth_category]
        # ties go to the true category, so equal scores carry no loss
        predicted = max(
            by_category,
            key=lambda c: (by_category[c], c == truth_category),
        )
        delta = 0.0 if predicted == truth_category else 1.0
        cate_terms.append(category_hinge(delta, by_category[predicted], true_score))

        pose = aog.pose_by_key(parse.pose_key)
        states = {p.name: p for p in parse.parts if p.name is not None}
        for name, gt_box in scene.part_boxes.items():
            state = states.get(name)
            part = next((p for p in pose.semantic_parts() if p.name == name), None)
            if part is None or state is None:
                continue
            true_part_score = part_score_at(part, grid, gt_box, extractor)
            if state.visible and state.region is not None:
                overlap = iou(state.region.box, gt_box)
                predicted_part_score = state.score
            else:
                overlap = 0.0
                predicted_part_score = state.score
            part_terms.append(
                max(0.0, (1.0 - overlap) + predicted_part_score - true_part_score)
            )
    cate = v_category * float(np.mean(cate_terms)) if cate_terms else 0.0
    part = v_part * float(np.mean(part_terms)) if part_terms else 0.0
    return cate, part
