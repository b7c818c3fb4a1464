"""Parsing: candidate proposal, pose assignment optimization, and parse graphs.

Inference for one pose is a small quadratic assignment: each part picks one of
its proposed placements or its invisible alternative, coupled by pairwise
deformations. The joint optimum is found by exhaustive enumeration while the
joint space stays small, otherwise by coordinate ascent from random restarts.
Layers 6-9 are refined per part afterwards, since parts are conditionally
independent given the layer-4 assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .features import GridFeatureExtractor
from .geometry import Box, Region, iround, region_from_box, split_region
from .nodes import Aog, PartNode, PoseNode, SplitNode, LATENT, SEMANTIC
from .scoring import score_and, score_deformation, score_latent_child, score_or, score_terminal

SCALE_LADDER = (0.75, 1.0, 1.33)
ENUMERATION_LIMIT = 10**6
RESTARTS = 10


class InfeasibleAssignmentError(RuntimeError):
    """Raised when every joint assignment hits the placement-clash sentinel."""


@dataclass(frozen=True)
class Candidate:
    """One scored placement proposal for a part."""

    region: Region
    score: float
    child_index: int


@dataclass
class CandidateSet:
    """Per-part placement proposals for one pose."""

    per_part: list[list[Candidate]]


@dataclass
class PartState:
    """Resolved state of one part inside a parse graph."""

    name: str | None
    kind: str
    visible: bool
    region: Region | None
    score: float
    child_index: int | None
    detail: dict | None = None


@dataclass
class ParseGraph:
    """Best explanation of a scene: a category, a pose, and placed parts."""

    category: str
    pose_index: int
    pose_key: str
    parts: list[PartState]
    score: float
    pose_scores: dict[str, float] = field(default_factory=dict)


def part_window_sizes(part: PartNode, ladder=SCALE_LADDER) -> list[tuple[int, int]]:
    """Integer (width, height) raster windows for each ladder rung."""
    sizes = []
    for rung in ladder:
        scale = part.nominal_scale * rung
        w = max(1, iround(scale * math.sqrt(part.aspect)))
        h = max(1, iround(scale / math.sqrt(part.aspect)))
        sizes.append((w, h))
    return sizes


def _appearance_scores(part: PartNode, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best visible-child score per feature row, plus the winning child index."""
    if part.kind == LATENT:
        if not part.children:
            raise ValueError("latent part has no appearance alternatives")
        stacked = np.empty((len(part.children), features.shape[0]))
        for i, child in enumerate(part.children):
            diff = features - np.asarray(child.mean_appearance, dtype=float)
            stacked[i] = child.norm_scale * np.einsum("ij,ij->i", diff, diff) + child.norm_offset
        best = np.argmax(stacked, axis=0)
        return stacked[best, np.arange(features.shape[0])], best
    if part.kind == SEMANTIC:
        if part.classifier is None:
            raise ValueError(f"semantic part {part.name!r} has no classifier yet")
        margins = features @ np.asarray(part.classifier.weights, dtype=float) + part.classifier.bias
        return part.margin_scale * margins + part.margin_offset, np.zeros(features.shape[0], dtype=int)
    raise ValueError(f"unknown part kind {part.kind!r}")


def propose_candidates(
    grid: np.ndarray,
    pose: PoseNode,
    budget: int,
    extractor: GridFeatureExtractor | None = None,
    search_region: Box | None = None,
    ladder=SCALE_LADDER,
) -> CandidateSet:
    """Top-``budget`` placements per part from a dense grid sweep.

    Every fully-inside window at stride one is scored for each ladder rung;
    ties break toward smaller (y, x, rung) so proposals are deterministic.
    Placements whose centers fall outside ``search_region`` are dropped.
    """
    if budget < 1:
        raise ValueError(f"budget must be positive, got {budget}")
    extractor = extractor or GridFeatureExtractor()
    per_part: list[list[Candidate]] = []
    for part in pose.parts:
        centers_all = []
        feats_all = []
        rung_all = []
        for rung_idx, (w, h) in enumerate(part_window_sizes(part, ladder)):
            centers, feats = extractor.sweep(grid, w, h)
            if centers.shape[0] == 0:
                continue
            if search_region is not None:
                x0, y0, x1, y1 = search_region
                keep = (
                    (centers[:, 0] >= x0)
                    & (centers[:, 0] <= x1)
                    & (centers[:, 1] >= y0)
                    & (centers[:, 1] <= y1)
                )
                centers, feats = centers[keep], feats[keep]
            if centers.shape[0] == 0:
                continue
            centers_all.append(centers)
            feats_all.append(feats)
            rung_all.append(np.full(centers.shape[0], rung_idx))
        if not centers_all:
            raise ValueError("no feasible placements: scene or search region too small")
        centers = np.vstack(centers_all)
        feats = np.vstack(feats_all)
        rungs = np.concatenate(rung_all)
        scores, child_idx = _appearance_scores(part, feats)
        order = np.lexsort((rungs, centers[:, 0], centers[:, 1], -scores))
        chosen = order[: min(budget, order.size)]
        cands = []
        for i in chosen:
            w, h = part_window_sizes(part, ladder)[int(rungs[i])]
            cx, cy = centers[i]
            box = (cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
            cands.append(Candidate(region=region_from_box(box), score=float(scores[i]), child_index=int(child_idx[i])))
        per_part.append(cands)
    return CandidateSet(per_part=per_part)


@dataclass
class Assignment:
    """One joint placement choice: per-part option indices and the pose score."""

    choices: list[int]
    score: float
    part_scores: list[float]
    regions: list[Region | None]


def _option_tables(pose: PoseNode, candidates: CandidateSet):
    """Unary score vectors and pairwise score matrices over part options.

    Option ``k < n_cands`` is candidate ``k``; the last option, present when a
    part has an invisible penalty, is invisibility.
    """
    unary: list[np.ndarray] = []
    regions: list[list[Region | None]] = []
    for part, cands in zip(pose.parts, candidates.per_part):
        scores = [c.score for c in cands]
        regs: list[Region | None] = [c.region for c in cands]
        if part.invisible_penalty is not None:
            scores.append(float(part.invisible_penalty))
            regs.append(None)
        if not scores:
            raise ValueError("part has neither candidates nor an invisible alternative")
        unary.append(np.asarray(scores, dtype=float))
        regions.append(regs)
    pair_tables: list[tuple[int, int, np.ndarray]] = []
    for rel in pose.pairs:
        ra, rb = regions[rel.a], regions[rel.b]
        table = np.empty((len(ra), len(rb)))
        for i, reg_a in enumerate(ra):
            for j, reg_b in enumerate(rb):
                if reg_a is None or reg_b is None:
                    value = rel.miss_penalty
                elif reg_a.same_placement(reg_b):
                    table[i, j] = -math.inf
                    continue
                else:
                    value = score_deformation(rel, reg_a, reg_b)
                table[i, j] = rel.weight * value
        pair_tables.append((rel.a, rel.b, table))
    return unary, regions, pair_tables


def optimize_pose_assignment(
    pose: PoseNode,
    candidates: CandidateSet,
    seed: int = 0,
    enumeration_limit: int = ENUMERATION_LIMIT,
    restarts: int = RESTARTS,
) -> Assignment:
    """Maximize the pose score over joint part placements.

    Exhaustive enumeration is used while the option product stays within
    ``enumeration_limit``; beyond that, coordinate ascent runs from ``restarts``
    random starts plus the all-invisible start when available. Ties resolve to
    the lexicographically smallest option tuple.
    """
    if len(candidates.per_part) != len(pose.parts):
        raise ValueError("candidate set does not align with the pose parts")
    unary, regions, pair_tables = _option_tables(pose, candidates)
    counts = [u.size for u in unary]
    joint = 1
    for c in counts:
        joint *= c
    if joint <= enumeration_limit:
        choices = _enumerate_best(unary, pair_tables, counts)
    else:
        choices = _ascend_best(unary, pair_tables, counts, seed, restarts, pose)
    if choices is None:
        raise InfeasibleAssignmentError("every joint assignment clashes on a shared placement")
    part_scores = [float(unary[i][k]) for i, k in enumerate(choices)]
    regs = [regions[i][k] for i, k in enumerate(choices)]
    score = score_and(pose, part_scores, regs)
    return Assignment(choices=list(choices), score=float(score), part_scores=part_scores, regions=regs)


def _enumerate_best(unary, pair_tables, counts):
    grids = np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")
    flat = [g.ravel() for g in grids]
    total = np.zeros(flat[0].size)
    for i, u in enumerate(unary):
        total += u[flat[i]]
    for a, b, table in pair_tables:
        total += table[flat[a], flat[b]]
    best = int(np.argmax(total))
    if math.isinf(total[best]) and total[best] < 0:
        return None
    return [int(f[best]) for f in flat]


def _joint_score(choices, unary, pair_tables):
    total = 0.0
    for i, k in enumerate(choices):
        total += unary[i][k]
    for a, b, table in pair_tables:
        total += table[choices[a], choices[b]]
    return total


def _ascend_best(unary, pair_tables, counts, seed, restarts, pose):
    rng = np.random.default_rng(seed)
    n = len(counts)
    starts = []
    if all(p.invisible_penalty is not None for p in pose.parts):
        starts.append([c - 1 for c in counts])
    for _ in range(restarts):
        starts.append([int(rng.integers(c)) for c in counts])
    by_part: list[list[tuple[int, int, np.ndarray]]] = [[] for _ in range(n)]
    for a, b, table in pair_tables:
        by_part[a].append((a, b, table))
        by_part[b].append((a, b, table))
    best_choices = None
    best_score = -math.inf
    for start in starts:
        choices = list(start)
        for _ in range(100):
            changed = False
            for i in range(n):
                gains = unary[i].copy()
                for a, b, table in by_part[i]:
                    gains = gains + (table[:, choices[b]] if a == i else table[choices[a], :])
                pick = int(np.argmax(gains))
                if pick != choices[i]:
                    choices[i] = pick
                    changed = True
            if not changed:
                break
        score = _joint_score(choices, unary, pair_tables)
        if score > best_score:
            best_score = score
            best_choices = choices
    if best_choices is None or (math.isinf(best_score) and best_score < 0):
        return None
    return best_choices


def score_pose_on_grid(
    pose: PoseNode,
    grid: np.ndarray,
    budget: int,
    extractor: GridFeatureExtractor | None = None,
    search_region: Box | None = None,
    seed: int = 0,
) -> Assignment:
    """Propose candidates and solve the assignment in one step."""
    candidates = propose_candidates(grid, pose, budget, extractor, search_region)
    return optimize_pose_assignment(pose, candidates, seed=seed)


def refine_template(split: SplitNode, grid: np.ndarray, region: Region, extractor: GridFeatureExtractor) -> dict:
    """Layer 6-9 refinement: descend the split template, picking OR branches.

    Sub-regions are fixed fractions of the part box, so the trace records only
    the chosen alternatives per OR level and the terminal scores.
    """
    trace: dict = {"score": 0.0, "branches": []}
    total = 0.0
    halves = split_region(region, split.axis)
    for half, alts in zip(halves, split.children):
        best_alt = None
        best_score = -math.inf
        for ai, alt in enumerate(alts.children):
            quarters = split_region(half, alt.axis)
            alt_score = 0.0
            picks = []
            for quarter, leaf_alts in zip(quarters, alt.children):
                feat = extractor(grid, quarter)
                leaf_scores = [score_terminal(t.template, feat) for t in leaf_alts.children]
                s, pick = score_or(leaf_scores)
                alt_score += s
                picks.append(pick)
            if alt_score > best_score:
                best_score = alt_score
                best_alt = {"alt": ai, "leaves": picks, "score": alt_score}
        trace["branches"].append(best_alt)
        total += best_score if best_alt is not None else 0.0
    trace["score"] = total
    return trace


def parse(
    aog: Aog,
    grid: np.ndarray,
    budget: int = 5,
    extractor: GridFeatureExtractor | None = None,
    search_region: Box | None = None,
    seed: int = 0,
) -> ParseGraph:
    """Best full explanation of a scene under the graph.

    Every pose is optimized independently; the layer-1/2 OR nodes then pick the
    best pose, ties resolving to the lowest pose index in category order.
    """
    extractor = extractor or GridFeatureExtractor()
    poses = aog.poses()
    if not poses:
        raise ValueError("graph has no poses to parse with")
    best: tuple[float, int] | None = None
    assignments: list[Assignment] = []
    pose_scores: dict[str, float] = {}
    for idx, pose in enumerate(poses):
        assignment = score_pose_on_grid(pose, grid, budget, extractor, search_region, seed)
        assignments.append(assignment)
        pose_scores[pose.key] = assignment.score
        if best is None or assignment.score > best[0]:
            best = (assignment.score, idx)
    assert best is not None
    pose = poses[best[1]]
    assignment = assignments[best[1]]
    parts: list[PartState] = []
    for part, choice, region, part_score in zip(pose.parts, assignment.choices, assignment.regions, assignment.part_scores):
        visible = region is not None
        child_index: int | None = None
        detail = None
        if visible:
            if part.kind == LATENT:
                feats = extractor(grid, region)
                child_scores = [score_latent_child(c, feats) for c in part.children]
                _, child_index = score_or(child_scores)
            else:
                child_index = 0
                template = part.children[0].children if part.children else None
                if part.children and isinstance(part.children[0], SplitNode) and template:
                    detail = refine_template(part.children[0], grid, region, extractor)
        parts.append(
            PartState(
                name=part.name,
                kind=part.kind,
                visible=visible,
                region=region,
                score=part_score,
                child_index=child_index if visible else None,
                detail=detail,
            )
        )
    return ParseGraph(
        category=pose.category,
        pose_index=pose.index,
        pose_key=pose.key,
        parts=parts,
        score=assignment.score,
        pose_scores=pose_scores,
    )


def detect_best_object(
    aog: Aog,
    grid: np.ndarray,
    truth_box: Box,
    budget: int = 5,
    extractor: GridFeatureExtractor | None = None,
    seed: int = 0,
) -> ParseGraph:
    """Parse restricted around a known object box, for evaluation probes.

    The search region spans one full box width/height to each side of the
    ground-truth center; part centers must fall inside it.
    """
    _, height, width = grid.shape
    x0, y0, x1, y1 = truth_box
    w = x1 - x0
    h = y1 - y0
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate truth box {truth_box}")
    cx = (x0 + x1) / 2.0
    cy = (y0 + y1) / 2.0
    region = (max(0.0, cx - w), max(0.0, cy - h), min(float(width), cx + w), min(float(height), cy + h))
    if region[0] >= region[2] or region[1] >= region[3]:
        raise ValueError("search region falls outside the scene")
    return parse(aog, grid, budget, extractor, search_region=region, seed=seed)
