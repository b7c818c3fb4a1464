"""Parameter estimation and structure mining.

Covers the trainable surface of the graph: linear part classifiers, latent
appearance children, invisibility and miss penalties, split-template trees,
hard-negative mining, and the structure search that grows or prunes a pose's
latent parts against a complexity-penalized fit objective.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .features import GridFeatureExtractor
from .geometry import Region, split_region
from .inference import part_window_sizes, score_pose_on_grid
from .nodes import (
    AlternativesNode,
    LatentChild,
    LinearClassifier,
    PartNode,
    PoseNode,
    SplitNode,
    TerminalNode,
    LATENT,
    SEMANTIC,
    drop_part,
    rebuild_pairs,
)
from .scoring import calibrate_normalization, pairwise_geometry

log = logging.getLogger(__name__)

PENALTY_PERCENTILE = 10.0


# ---------------------------------------------------------------------------
# linear classifier training

def train_linear_classifier(
    positives: np.ndarray,
    negatives: np.ndarray,
    epochs: int = 200,
    lr0: float = 0.1,
    l2: float = 1e-3,
) -> LinearClassifier:
    """Hinge-loss linear separator via full-batch subgradient descent.

    Full-batch updates keep the result deterministic without a seed.
    """
    pos = np.atleast_2d(np.asarray(positives, dtype=float))
    neg = np.atleast_2d(np.asarray(negatives, dtype=float))
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one positive and one negative example")
    w = np.zeros(pos.shape[1])
    b = 0.0
    for t in range(1, epochs + 1):
        lr = lr0 / math.sqrt(t)
        grad_w = l2 * w
        grad_b = 0.0
        # classes weighted equally so one exemplar can stand up to a sea of
        # background windows
        for x, y, share in ((pos, 1.0, 0.5), (neg, -1.0, 0.5)):
            active = y * (x @ w + b) < 1.0
            if np.any(active):
                grad_w = grad_w - share * y * x[active].sum(axis=0) / len(x)
                grad_b = grad_b - share * y * active.sum() / len(x)
        w = w - lr * grad_w
        b = b - lr * grad_b
    return LinearClassifier(weights=w, bias=float(b))


# ---------------------------------------------------------------------------
# background feature pools (shared by calibration and mining)

def background_features(
    backgrounds: list[np.ndarray],
    window: tuple[int, int],
    extractor: GridFeatureExtractor,
) -> np.ndarray:
    """Every sliding-window feature over every background grid, stacked."""
    w, h = window
    feats = []
    for bg in backgrounds:
        _, f = extractor.sweep(bg, w, h)
        if len(f):
            feats.append(f)
    if not feats:
        raise ValueError(f"window {window} does not fit any background grid")
    return np.vstack(feats)


def calibrate_latent_child(child: LatentChild, bg_feats: np.ndarray) -> None:
    """Set the child's scale/offset so background residuals standardize."""
    diff = bg_feats - child.mean_appearance[None, :]
    residuals = np.einsum("ij,ij->i", diff, diff)
    w, b = calibrate_normalization([-float(r) for r in residuals])
    child.norm_scale = -w
    child.norm_offset = b


def calibrate_classifier_margin(part: PartNode, bg_feats: np.ndarray) -> None:
    margins = bg_feats @ part.classifier.weights + part.classifier.bias
    w, b = calibrate_normalization([float(m) for m in margins])
    part.margin_scale = w
    part.margin_offset = b


def retrain_semantic_classifiers(
    pose: PoseNode,
    positives: dict[str, np.ndarray],
    negatives: dict[str, np.ndarray],
    backgrounds: list[np.ndarray],
    extractor: GridFeatureExtractor,
) -> list[str]:
    """Refit every semantic part with labeled positives plus mined negatives.

    Returns the names actually retrained; parts without positives keep their
    current classifier.
    """
    trained = []
    for part in pose.semantic_parts():
        name = part.name
        pos = positives.get(name)
        if pos is None or len(pos) == 0:
            continue
        neg = negatives.get(name)
        window = part_window_sizes(part, (1.0,))[0]
        bg_feats = background_features(backgrounds, window, extractor)
        if neg is None or len(neg) == 0:
            neg = bg_feats
        else:
            neg = np.vstack([np.atleast_2d(neg), bg_feats])
        part.classifier = train_linear_classifier(pos, neg)
        calibrate_classifier_margin(part, bg_feats)
        trained.append(name)
    return trained


# ---------------------------------------------------------------------------
# penalties

@dataclass
class PenaltyEstimate:
    part_penalties: list[float | None]
    pair_penalties: list[float | None]


def estimate_penalties(
    samples: list[np.ndarray],
    pose: PoseNode,
    budget: int = 4,
    extractor: GridFeatureExtractor | None = None,
    seed: int = 0,
) -> PenaltyEstimate:
    """Low percentile of detected-case scores, per part and per pair.

    Part penalties live in score space (they compete with visible scores in
    the max). Pair penalties are stored in residual space, so the score-space
    percentile gets divided by the pair weight.
    """
    extractor = extractor or GridFeatureExtractor()
    part_values: list[list[float]] = [[] for _ in pose.parts]
    pair_values: list[list[float]] = [[] for _ in pose.pairs]
    for grid in samples:
        assignment = score_pose_on_grid(pose, grid, budget=budget, extractor=extractor, seed=seed)
        regions = assignment.regions
        for i, score in enumerate(assignment.part_scores):
            if regions[i] is not None:
                part_values[i].append(score)
        for j, rel in enumerate(pose.pairs):
            ra, rb = regions[rel.a], regions[rel.b]
            if ra is None or rb is None or ra.same_placement(rb):
                continue
            diff = np.asarray(pairwise_geometry(ra, rb)) - np.asarray(rel.mean_geometry)
            pair_values[j].append(rel.weight * float(np.dot(diff, diff)))
    parts_out: list[float | None] = []
    for values in part_values:
        parts_out.append(float(np.percentile(values, PENALTY_PERCENTILE)) if values else None)
    pairs_out: list[float | None] = []
    for j, values in enumerate(pair_values):
        if values:
            weight = pose.pairs[j].weight
            pairs_out.append(float(np.percentile(values, PENALTY_PERCENTILE)) / weight)
        else:
            pairs_out.append(None)
    return PenaltyEstimate(part_penalties=parts_out, pair_penalties=pairs_out)


def apply_penalties(pose: PoseNode, estimate: PenaltyEstimate) -> None:
    for part, value in zip(pose.parts, estimate.part_penalties):
        if value is not None:
            part.invisible_penalty = value
    for rel, value in zip(pose.pairs, estimate.pair_penalties):
        if value is not None:
            rel.miss_penalty = value


def calibrate_pose(pose: PoseNode, backgrounds: list[np.ndarray], extractor: GridFeatureExtractor, budget: int = 4) -> None:
    """Standardize the pose total against assignment-optimized background scores.

    Measured with the invisible options switched off: once penalties exist,
    every background collapses to the same all-invisible total and the
    variance needed for standardization vanishes.
    """
    bare = copy.deepcopy(pose)
    bare.norm_scale = 1.0
    bare.norm_offset = 0.0
    for part in bare.parts:
        part.invisible_penalty = None
    scores = [score_pose_on_grid(bare, bg, budget=budget, extractor=extractor).score for bg in backgrounds]
    w, b = calibrate_normalization(scores)
    pose.norm_scale = w
    pose.norm_offset = b


# ---------------------------------------------------------------------------
# split-template trees (appearance detail below semantic parts)

def _kmeans(x: np.ndarray, k: int, iters: int = 25) -> tuple[np.ndarray, np.ndarray, float]:
    """Deterministic k-means: farthest-first seeding, Lloyd refinement.

    Returns (centers, labels, within-cluster sum of squares).
    """
    n = len(x)
    k = min(k, n)
    centroid = x.mean(axis=0)
    first = int(np.argmax(np.einsum("ij,ij->i", x - centroid, x - centroid)))
    centers = [x[first]]
    for _ in range(1, k):
        d = np.min(
            np.stack([np.einsum("ij,ij->i", x - c, x - c) for c in centers]), axis=0
        )
        centers.append(x[int(np.argmax(d))])
    c = np.stack(centers)
    labels = np.zeros(n, dtype=int)
    for _ in range(iters):
        d = ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d, axis=1)
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for j in range(len(c)):
            members = x[labels == j]
            if len(members):
                c[j] = members.mean(axis=0)
    d = ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
    wcss = float(d[np.arange(n), labels].sum())
    return c, labels, wcss


def cluster_alternatives(x: np.ndarray, max_k: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Split into more clusters only while doing so halves the scatter."""
    x = np.atleast_2d(x)
    centers, labels, wcss = _kmeans(x, 1)
    for k in range(2, min(max_k, len(x)) + 1):
        c2, l2, w2 = _kmeans(x, k)
        if wcss > 0 and w2 < 0.5 * wcss:
            centers, labels, wcss = c2, l2, w2
        else:
            break
    return centers, labels


def _split_axis(region: Region) -> int:
    # cut the longer side: 0 is a left/right split, 1 top/bottom
    return 0 if region.width >= region.height else 1


def learn_part_template(
    part: PartNode,
    examples: list[tuple[np.ndarray, Region]],
    extractor: GridFeatureExtractor,
    max_alternatives: int = 3,
) -> SplitNode:
    """Build the split tree under a semantic part from labeled patches.

    Two nested splits along each patch's longer side, with clustered
    appearance alternatives between them and terminal templates at the
    bottom. Mounted as the part's single visible child.
    """
    if not examples:
        raise ValueError("cannot learn a template from zero examples")
    root_axis = _split_axis(examples[0][1])
    root = SplitNode(layer=5, axis=root_axis)
    for half_idx in range(2):
        half_regions = [split_region(region, root_axis)[half_idx] for _, region in examples]
        half_feats = np.stack([extractor(grid, r) for (grid, _), r in zip(examples, half_regions)])
        _, labels = cluster_alternatives(half_feats, max_alternatives)
        alts = AlternativesNode(layer=6)
        for alt_label in sorted(set(int(v) for v in labels)):
            members = [i for i in range(len(examples)) if labels[i] == alt_label]
            sub_axis = _split_axis(half_regions[members[0]])
            sub = SplitNode(layer=7, axis=sub_axis)
            for quarter_idx in range(2):
                quarter_feats = np.stack(
                    [
                        extractor(examples[i][0], split_region(half_regions[i], sub_axis)[quarter_idx])
                        for i in members
                    ]
                )
                centers, _ = cluster_alternatives(quarter_feats, max_alternatives)
                leaf_alts = AlternativesNode(layer=8)
                leaf_alts.children = [TerminalNode(template=center.copy()) for center in centers]
                sub.children.append(leaf_alts)
            alts.children.append(sub)
        root.children.append(alts)
    part.children = [root]
    return root


# ---------------------------------------------------------------------------
# hard negatives

def mine_hard_negatives(
    pose: PoseNode,
    scenes: list[np.ndarray],
    extractor: GridFeatureExtractor,
    budget: int = 4,
    seed: int = 0,
) -> dict[str, np.ndarray]:
    """Features at the pose's own best placements on scenes known not to show it."""
    collected: dict[str, list[np.ndarray]] = {p.name: [] for p in pose.semantic_parts()}
    for grid in scenes:
        assignment = score_pose_on_grid(pose, grid, budget=budget, extractor=extractor, seed=seed)
        for i, part in enumerate(pose.parts):
            if part.kind != SEMANTIC:
                continue
            region = assignment.regions[i]
            if region is not None:
                collected[part.name].append(extractor(grid, region))
    return {name: np.stack(feats) for name, feats in collected.items() if feats}


# ---------------------------------------------------------------------------
# structure mining

@dataclass
class MiningConfig:
    complexity_weight: float = 0.1  # price of one complexity unit in fit units
    child_weight: float = 0.5  # how much each appearance alternative costs
    budget: int = 4
    max_parts: int = 6
    max_children: int = 3
    max_moves: int = 12
    min_separation: float = 3.0  # new parts must keep their distance
    epsilon: float = 1e-9
    part_pixels: int = 4


@dataclass
class MiningReport:
    objective_trajectory: list[float] = field(default_factory=list)
    accepted_moves: list[str] = field(default_factory=list)
    fit_before: float = 0.0
    fit_after: float = 0.0
    part_count: int = 0
    child_counts: list[int] = field(default_factory=list)


def complexity(pose: PoseNode, child_weight: float) -> float:
    """Average per-part cost of the pose: one unit per part plus a share per
    appearance alternative."""
    n_parts = len(pose.parts)
    if n_parts == 0:
        raise ValueError("pose has no parts")
    n_children = 0
    for part in pose.parts:
        if part.kind == LATENT:
            n_children += len(part.children)
        else:
            n_children += 1
    return (n_parts + child_weight * n_children) / n_parts


def _raw_pose_scores(
    pose: PoseNode,
    grids: list[np.ndarray],
    budget: int,
    extractor: GridFeatureExtractor,
) -> list[float]:
    """Pose totals before normalization, one per grid."""
    bare = copy.deepcopy(pose)
    bare.norm_scale = 1.0
    bare.norm_offset = 0.0
    return [score_pose_on_grid(bare, g, budget=budget, extractor=extractor).score for g in grids]


def _fit(pose, positives, backgrounds, budget, extractor) -> float:
    pos = _raw_pose_scores(pose, positives, budget, extractor)
    neg = _raw_pose_scores(pose, backgrounds, budget, extractor)
    return float(np.mean(pos) - np.mean(neg))


def _mean_assigned_regions(
    pose: PoseNode,
    grids: list[np.ndarray],
    budget: int,
    extractor: GridFeatureExtractor,
) -> list[Region | None]:
    """Average placement of each part over its visible assignments."""
    sums = [np.zeros(4) for _ in pose.parts]
    counts = [0 for _ in pose.parts]
    for grid in grids:
        assignment = score_pose_on_grid(pose, grid, budget=budget, extractor=extractor)
        for i, region in enumerate(assignment.regions):
            if region is not None:
                sums[i] += np.array([region.cx, region.cy, region.scale, region.aspect])
                counts[i] += 1
    out: list[Region | None] = []
    for s, c in zip(sums, counts):
        if c == 0:
            out.append(None)
        else:
            cx, cy, sc, asp = s / c
            out.append(Region(cx=cx, cy=cy, scale=sc, aspect=asp))
    return out


def _refresh_pair_geometry(pose: PoseNode, regions: list[Region | None]) -> None:
    for rel in pose.pairs:
        ra, rb = regions[rel.a], regions[rel.b]
        if ra is None or rb is None or ra.same_placement(rb):
            continue
        rel.mean_geometry = pairwise_geometry(ra, rb)


def _part_placement_features(
    pose: PoseNode,
    part_index: int,
    grids: list[np.ndarray],
    budget: int,
    extractor: GridFeatureExtractor,
) -> np.ndarray:
    feats = []
    for grid in grids:
        assignment = score_pose_on_grid(pose, grid, budget=budget, extractor=extractor)
        region = assignment.regions[part_index]
        if region is not None:
            feats.append(extractor(grid, region))
    return np.stack(feats) if feats else np.empty((0, 0))


def _seed_new_part(
    pose: PoseNode,
    positives: list[np.ndarray],
    bg_feats: np.ndarray,
    extractor: GridFeatureExtractor,
    cfg: MiningConfig,
    occupied: list[Region | None],
) -> tuple[PartNode, Region] | None:
    """Place a fresh latent part on the strongest unclaimed appearance mass."""
    px = cfg.part_pixels
    per_scene = []
    centers = None
    for grid in positives:
        c, f = extractor.sweep(grid, px, px)
        if not len(f):
            return None
        per_scene.append(f)
        centers = c
    mean_feat = np.mean(np.stack(per_scene), axis=0)
    bg_mean = bg_feats.mean(axis=0)
    energy = np.einsum("ij,ij->i", mean_feat - bg_mean, mean_feat - bg_mean)
    order = np.argsort(-energy, kind="stable")
    taken = [r for r in occupied if r is not None]
    for idx in order:
        cx, cy = centers[idx]
        if all(math.hypot(cx - r.cx, cy - r.cy) >= cfg.min_separation for r in taken):
            template = mean_feat[idx].copy()
            child = LatentChild(mean_appearance=template)
            part = PartNode(kind=LATENT, name=None, children=[child], nominal_scale=float(px))
            region = Region(cx=float(cx), cy=float(cy), scale=float(px))
            return part, region
    return None


def _with_added_part(
    pose: PoseNode,
    part: PartNode,
    region: Region,
    mean_regions: list[Region | None],
    bg_feats: np.ndarray,
) -> PoseNode:
    trial = copy.deepcopy(pose)
    new_part = copy.deepcopy(part)
    calibrate_latent_child(new_part.children[0], bg_feats)
    trial.parts.append(new_part)
    rebuild_pairs(trial)
    regions = list(mean_regions) + [region]
    _refresh_pair_geometry(trial, regions)
    return trial


def _with_dropped_part(pose: PoseNode, index: int) -> PoseNode:
    trial = copy.deepcopy(pose)
    drop_part(trial, index)
    return trial


def _with_reestimated_part(
    pose: PoseNode,
    index: int,
    positives: list[np.ndarray],
    bg_feats: np.ndarray,
    budget: int,
    extractor: GridFeatureExtractor,
) -> PoseNode | None:
    feats = _part_placement_features(pose, index, positives, budget, extractor)
    if len(feats) == 0:
        return None
    trial = copy.deepcopy(pose)
    child = LatentChild(mean_appearance=feats.mean(axis=0))
    calibrate_latent_child(child, bg_feats)
    trial.parts[index].children = [child]
    regions = _mean_assigned_regions(trial, positives, budget, extractor)
    _refresh_pair_geometry(trial, regions)
    return trial


def mine_pose_structure(
    pose: PoseNode,
    positives: list[np.ndarray],
    backgrounds: list[np.ndarray],
    extractor: GridFeatureExtractor | None = None,
    config: MiningConfig | None = None,
    model_invisibility: bool = True,
) -> MiningReport:
    """Hill-climb the pose's latent structure against fit minus complexity.

    Phase one adds, drops, or re-estimates whole latent parts while every
    latent part carries a single appearance child, which keeps the
    complexity term flat so part decisions depend only on fit. Phase two
    trades appearance alternatives against the complexity price. Only
    strictly improving moves are accepted, so the objective trajectory is
    non-decreasing by construction; the trajectory is recorded and returned
    for auditing.

    ``model_invisibility`` gates the closing penalty estimation: a caller
    that has never seen a hidden part keeps the invisible options off, so
    nothing competes with genuine placements.
    """
    extractor = extractor or GridFeatureExtractor()
    cfg = config or MiningConfig()
    if not positives:
        raise ValueError("mining needs at least one confirmed sample")
    if not backgrounds:
        raise ValueError("mining needs background grids for contrast")

    px = cfg.part_pixels
    bg_feats = background_features(backgrounds, (px, px), extractor)

    def objective(p: PoseNode) -> tuple[float, float]:
        f = _fit(p, positives, backgrounds, cfg.budget, extractor)
        return f - cfg.complexity_weight * complexity(p, cfg.child_weight), f

    report = MiningReport()
    # phase one demands single-child latent parts; stash extra alternatives
    for part in pose.latent_parts():
        if len(part.children) > 1:
            part.children = part.children[:1]

    current_j, current_fit = objective(pose)
    report.fit_before = current_fit
    report.objective_trajectory.append(current_j)

    for _ in range(cfg.max_moves):
        best: tuple[float, float, str, PoseNode] | None = None
        mean_regions = _mean_assigned_regions(pose, positives, cfg.budget, extractor)

        latent_indices = [i for i, p in enumerate(pose.parts) if p.kind == LATENT]
        if len(pose.parts) < cfg.max_parts:
            seeded = _seed_new_part(pose, positives, bg_feats, extractor, cfg, mean_regions)
            if seeded is not None:
                trial = _with_added_part(pose, seeded[0], seeded[1], mean_regions, bg_feats)
                j, f = objective(trial)
                if best is None or j > best[0]:
                    best = (j, f, "add-part", trial)
        for idx in latent_indices:
            if len(pose.parts) > 1:
                trial = _with_dropped_part(pose, idx)
                j, f = objective(trial)
                if best is None or j > best[0]:
                    best = (j, f, f"drop-part:{idx}", trial)
            trial = _with_reestimated_part(pose, idx, positives, bg_feats, cfg.budget, extractor)
            if trial is not None:
                j, f = objective(trial)
                if best is None or j > best[0]:
                    best = (j, f, f"refit-part:{idx}", trial)

        if best is None or best[0] <= current_j + cfg.epsilon:
            break
        current_j, current_fit = best[0], best[1]
        pose.parts = best[3].parts
        pose.pairs = best[3].pairs
        report.accepted_moves.append(best[2])
        report.objective_trajectory.append(current_j)

    # phase two: appearance alternatives, where the complexity price bites
    for _ in range(cfg.max_moves):
        best = None
        latent_indices = [i for i, p in enumerate(pose.parts) if p.kind == LATENT]
        for idx in latent_indices:
            part = pose.parts[idx]
            if len(part.children) < cfg.max_children:
                feats = _part_placement_features(pose, idx, positives, cfg.budget, extractor)
                if len(feats) > len(part.children):
                    centers, _ = cluster_alternatives(feats, len(part.children) + 1)
                    if len(centers) > len(part.children):
                        trial = copy.deepcopy(pose)
                        children = []
                        for center in centers:
                            child = LatentChild(mean_appearance=center.copy())
                            calibrate_latent_child(child, bg_feats)
                            children.append(child)
                        trial.parts[idx].children = children
                        j, f = objective(trial)
                        if best is None or j > best[0]:
                            best = (j, f, f"recluster-children:{idx}", trial)
            if len(part.children) > 1:
                for ci in range(len(part.children)):
                    trial = copy.deepcopy(pose)
                    trial.parts[idx].children = [
                        c for k, c in enumerate(trial.parts[idx].children) if k != ci
                    ]
                    j, f = objective(trial)
                    # dropping an alternative may not cost any fit
                    if f + cfg.epsilon < current_fit:
                        continue
                    if best is None or j > best[0]:
                        best = (j, f, f"drop-child:{idx}.{ci}", trial)

        if best is None or best[0] <= current_j + cfg.epsilon:
            break
        current_j, current_fit = best[0], best[1]
        pose.parts = best[3].parts
        pose.pairs = best[3].pairs
        report.accepted_moves.append(best[2])
        report.objective_trajectory.append(current_j)

    report.fit_after = current_fit
    report.part_count = len(pose.parts)
    report.child_counts = [
        len(p.children) if p.kind == LATENT else 1 for p in pose.parts
    ]

    # penalties first: they change the assignment optima the calibration sees
    if model_invisibility:
        apply_penalties(pose, estimate_penalties(positives, pose, budget=cfg.budget, extractor=extractor))
    calibrate_pose(pose, backgrounds, extractor, budget=cfg.budget)
    return report
