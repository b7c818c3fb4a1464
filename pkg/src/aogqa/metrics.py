"""Evaluation: overlap, per-part accuracy, explanation rate, localization error."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .geometry import Box, box_area, box_center

log = logging.getLogger(__name__)

# a prediction counts as correct above this overlap
IOU_THRESHOLD = 0.5


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes."""
    area_a = box_area(a)
    area_b = box_area(b)
    if area_a <= 0.0 or area_b <= 0.0:
        raise ValueError("boxes must have positive area")
    x0 = max(a[0], b[0])
    y0 = max(a[1], b[1])
    x1 = min(a[2], b[2])
    y1 = min(a[3], b[3])
    if x1 <= x0 or y1 <= y0:
        return 0.0
    inter = (x1 - x0) * (y1 - y0)
    return inter / (area_a + area_b - inter)


def localization_error(pred_center: tuple[float, float], gt_box: Box) -> float:
    """Center distance normalized by the truth part's diagonal size."""
    w = gt_box[2] - gt_box[0]
    h = gt_box[3] - gt_box[1]
    norm = math.sqrt(w * w + h * h)
    if norm <= 0.0:
        raise ValueError("degenerate ground-truth box")
    cx, cy = box_center(gt_box)
    dx = pred_center[0] - cx
    dy = pred_center[1] - cy
    return math.sqrt(dx * dx + dy * dy) / norm


@dataclass
class EvalReport:
    app: float
    aer: float
    per_type: dict[str, float] = field(default_factory=dict)
    mean_localization_error: float = 0.0
    objects: int = 0
    parts_evaluated: int = 0

    def summary(self) -> str:
        return (
            f"objects={self.objects} APP={self.app:.3f} AER={self.aer:.3f} "
            f"loc-err={self.mean_localization_error:.3f}"
        )


def _named_predictions(parse) -> dict[str, object]:
    return {p.name: p for p in parse.parts if p.name is not None}


def _part_correct(pred, truth_box: Box) -> bool:
    if pred is None or not pred.visible or pred.region is None:
        return False
    return iou(pred.region.box, truth_box) > IOU_THRESHOLD


def app(parses, ground_truths) -> tuple[float, dict[str, float]]:
    """Average over semantic part types of the per-type correct fraction.

    Parts invisible in the ground truth are skipped; a prediction marked
    invisible against a visible truth part counts as wrong.
    """
    tallies: dict[str, list[int]] = {}
    for parse, truth in zip(parses, ground_truths):
        preds = _named_predictions(parse)
        for part in truth.parts:
            if part.name is None or not part.visible:
                continue
            key = f"{truth.category}/{part.name}"
            hit = _part_correct(preds.get(part.name), part.box)
            tallies.setdefault(key, []).append(1 if hit else 0)
    if not tallies:
        raise ValueError("no visible semantic parts to score")
    per_type = {key: sum(v) / len(v) for key, v in sorted(tallies.items())}
    return sum(per_type.values()) / len(per_type), per_type


def aer(parses, ground_truths) -> float:
    """Fraction of objects whose parts are mostly correct.

    An object counts as explained when strictly more than two thirds of its
    scoreable semantic parts are localized above the overlap threshold.
    """
    if not parses:
        log.warning("explanation rate over zero objects; reporting 0")
        return 0.0
    explained = 0
    for parse, truth in zip(parses, ground_truths):
        preds = _named_predictions(parse)
        total = 0
        correct = 0
        for part in truth.parts:
            if part.name is None or not part.visible:
                continue
            total += 1
            if _part_correct(preds.get(part.name), part.box):
                correct += 1
        if total > 0 and correct / total > 2.0 / 3.0:
            explained += 1
    return explained / len(parses)


def evaluate(aog, scenes, budget: int = 5, extractor=None) -> EvalReport:
    """Parse every relevant scene within its truth region and score the lot."""
    from .features import GridFeatureExtractor
    from .inference import detect_best_object

    extractor = extractor or GridFeatureExtractor()
    parses = []
    truths = []
    for scene in scenes:
        if scene.truth is None:
            continue
        parse = detect_best_object(aog, scene.grid, scene.truth.object_box, budget=budget, extractor=extractor)
        parses.append(parse)
        truths.append(scene.truth)
    if not parses:
        raise ValueError("no relevant scenes to evaluate")
    app_value, per_type = app(parses, truths)
    errors = []
    evaluated = 0
    for parse, truth in zip(parses, truths):
        preds = _named_predictions(parse)
        for part in truth.parts:
            if part.name is None or not part.visible:
                continue
            evaluated += 1
            pred = preds.get(part.name)
            if pred is not None and pred.visible and pred.region is not None:
                errors.append(localization_error(pred.region.center(), part.box))
    return EvalReport(
        app=app_value,
        aer=aer(parses, truths),
        per_type=per_type,
        mean_localization_error=sum(errors) / len(errors) if errors else math.inf,
        objects=len(parses),
        parts_evaluated=evaluated,
    )
