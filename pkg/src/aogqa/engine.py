"""Learning-loop orchestration: bootstrap, storyline execution, main loop.

The engine owns all mutable learner state. Every human interaction goes
through an AnswerSource, so a simulated annotator and a live session are
interchangeable; all randomness comes from seeded generators so runs are
reproducible record for record.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .costs import (
    CostCounter,
    CostModel,
    KIND_COLLECT,
    KIND_NEW_ARRANGEMENT,
    KIND_PART_REVIEW,
    KIND_RETRIEVAL,
    PoolSizes,
    Storyline,
    predicted_cost,
)
from .features import GridFeatureExtractor
from .geometry import Box, Region, region_from_box
from .inference import score_pose_on_grid
from .learning import (
    MiningConfig,
    apply_penalties,
    background_features,
    calibrate_classifier_margin,
    calibrate_pose,
    estimate_penalties,
    learn_part_template,
    mine_hard_negatives,
    mine_pose_structure,
    part_window_sizes,
    retrain_semantic_classifiers,
    train_linear_classifier,
)
from .ledger import EventLog, GainRecord, RiskLedger
from .losses import AnnotatedScene, discriminative_loss, generative_loss
from .metrics import evaluate
from .nodes import (
    Aog,
    CategoryNode,
    PartNode,
    PoseNode,
    SEMANTIC,
    drop_part,
    rebuild_pairs,
)
from .oracle import (
    Answer,
    AnswerSource,
    CHECK_BOX,
    CHECK_SAMPLE,
    COMPOSITION,
    DRAW_BOX,
    NAMING,
    NEW_EXEMPLAR,
    Question,
    check_answer_kind,
)
from .scoring import pairwise_geometry
from .selection import build_candidates, predict_gains, select_next_storyline
from .world import World

log = logging.getLogger(__name__)


@dataclass
class EngineConfig:
    iterations: int = 20
    budget: int = 4  # candidate placements per part during assignment
    eval_budget: int = 5
    background_count: int = 8
    mining_sample_cap: int = 10
    penalty_sample_cap: int = 10
    seed: int = 0
    cost: CostModel = field(default_factory=CostModel)
    mining: MiningConfig = field(default_factory=MiningConfig)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "budget": self.budget,
            "eval_budget": self.eval_budget,
            "background_count": self.background_count,
            "mining_sample_cap": self.mining_sample_cap,
            "penalty_sample_cap": self.penalty_sample_cap,
            "seed": self.seed,
            "cost": self.cost.to_dict(),
        }


@dataclass
class CurvePoint:
    """One learning-curve row per executed storyline."""

    iteration: int
    kind: int
    target: str
    realized_cost: float
    predicted_cost: float
    cumulative_cost: float
    cumulative_predicted_cost: float
    gains: tuple[float, float, float]
    app: float
    aer: float
    boxes_cumulative: int
    judgments_cumulative: int


class LearnerState:
    """Everything the loop mutates: the graph, pools, examples, bookkeeping."""

    def __init__(self, world: World, config: EngineConfig, answer_source: AnswerSource, event_log: EventLog | None = None):
        self.world = world
        self.config = config
        self.answers = answer_source
        self.extractor = GridFeatureExtractor()
        self.aog = Aog()
        self.ledger = RiskLedger()
        self.log = event_log if event_log is not None else EventLog()
        self.rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xE1]))
        bg_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xB9]))
        self.backgrounds = [world.render_background(bg_rng) for _ in range(config.background_count)]
        self.part_names: dict[str, tuple[str, ...]] = {}
        self.confirmed: dict[str, list[str]] = {}
        self.rejected: dict[str, set[str]] = {}
        self.annotations: dict[str, AnnotatedScene] = {}
        self.part_examples: dict[tuple[str, str], list[tuple[str, Box]]] = {}
        self.reviewed: set[str] = set()
        self.collect_round: dict[str, int] = {}
        self.boxes_total = 0
        self.boxes_by_pose: dict[str, int] = {}
        self.judgments_total = 0
        self.saw_invisible = False  # gates invisibility modeling on evidence
        self._qid = 0
        for category in world.categories:
            self.ledger.category(category).pool_size = len(world.pools[category])

    # -- question plumbing ---------------------------------------------------

    def ask(self, question: Question) -> Answer:
        self.log.append(
            "question",
            qid=question.qid,
            kind=question.kind,
            category=question.category,
            scene=question.scene_id,
            part=question.part_name,
            box=list(question.proposed_box) if question.proposed_box else None,
            anchor=question.anchor_scene_id,
        )
        answer = self.answers.answer(question)
        check_answer_kind(question, answer)
        if question.kind == DRAW_BOX and answer.box is None:
            self.saw_invisible = True
        self.log.append(
            "answer",
            qid=question.qid,
            kind=answer.kind,
            yes=answer.yes,
            names=list(answer.names) if answer.names else None,
            box=list(answer.box) if answer.box else None,
            scene=answer.scene_id,
            boxes={k: list(v) for k, v in sorted(answer.boxes.items())} if answer.boxes else None,
        )
        return answer

    def next_question(self, **kwargs) -> Question:
        self._qid += 1
        return Question(qid=self._qid, **kwargs)

    # -- views ---------------------------------------------------------------

    def poses_by_category(self) -> dict[str, list[str]]:
        return {c.name: [p.key for p in c.poses] for c in self.aog.categories}

    def pose_sizes(self, line: Storyline) -> PoolSizes:
        if line.pose_key is not None:
            pose = self.aog.pose_by_key(line.pose_key)
            confirmed = len(self.confirmed.get(line.pose_key, []))
            semantic = len(pose.semantic_parts())
        else:
            confirmed = 0
            semantic = len(self.part_names.get(line.category, ())) or 1
        options = max(1, len(self.aog.category(line.category).poses)) if any(
            c.name == line.category for c in self.aog.categories
        ) else 1
        return PoolSizes(
            confirmed=confirmed,
            pose_options=options,
            category_pool=len(self.world.pools[line.category]),
            semantic_parts=semantic,
        )

    def grids(self, scene_ids: list[str]) -> list[np.ndarray]:
        return [self.world.scene(sid).grid for sid in scene_ids]

    def confirmed_anywhere(self, category: str) -> set[str]:
        out: set[str] = set()
        for pose in self.aog.category(category).poses:
            out.update(self.confirmed.get(pose.key, []))
        return out

    def unclaimed_pool(self, category: str, pose_key: str) -> list[str]:
        taken = self.confirmed_anywhere(category)
        vetoed = self.rejected.get(pose_key, set())
        return [
            s.scene_id
            for s in self.world.pools[category]
            if s.scene_id not in taken and s.scene_id not in vetoed
        ]

    def anchors(self) -> tuple[str, ...]:
        out = []
        for pose in self.aog.poses():
            if pose.anchor_scene is not None:
                out.append(pose.anchor_scene)
        return tuple(out)


# ---------------------------------------------------------------------------
# score helpers

def category_score(state: LearnerState, aog: Aog, category: str, grid: np.ndarray) -> float:
    """Best normalized pose score the category's model gives this grid."""
    best = None
    for cat in aog.categories:
        if cat.name != category:
            continue
        for pose in cat.poses:
            s = score_pose_on_grid(pose, grid, budget=state.config.budget, extractor=state.extractor).score
            if best is None or s > best:
                best = s
    return best if best is not None else 0.0


def build_dummy_pose(pose: PoseNode) -> PoseNode:
    """The pose with its semantic parts (and their pair relations) removed.

    Scoring the original against this stripped copy isolates how much the
    semantic parts explain, which is what picks the next scene to review.
    """
    if not pose.latent_parts():
        raise ValueError("dummy pose needs at least one latent part")
    dummy = copy.deepcopy(pose)
    while True:
        idx = next((i for i, p in enumerate(dummy.parts) if p.kind == SEMANTIC), None)
        if idx is None:
            break
        drop_part(dummy, idx)
    return dummy


def measure_losses(state: LearnerState, aog: Aog, pose_key: str | None) -> tuple[float, float, float]:
    """(generative, category, part) losses for gain bookkeeping.

    The generative term covers the target pose's confirmed pool; the two
    discriminative terms cover every annotated scene whose category the
    given graph models.
    """
    gen = 0.0
    if pose_key is not None:
        scene_ids = state.confirmed.get(pose_key, [])
        pose = next((p for p in aog.poses() if p.key == pose_key), None)
        if pose is not None and scene_ids:
            gen = generative_loss(pose, state.grids(scene_ids), budget=state.config.budget, extractor=state.extractor)
    known = {c.name for c in aog.categories}
    labeled = [a for a in state.annotations.values() if a.category in known]
    if labeled:
        cate, part = discriminative_loss(
            aog,
            labeled,
            v_category=state.config.cost.v_category,
            v_part=state.config.cost.v_part,
            budget=state.config.budget,
            extractor=state.extractor,
        )
    else:
        cate, part = 0.0, 0.0
    return gen, cate, part


def _category_pool_gain(state: LearnerState, before: Aog, after: Aog, category: str) -> float:
    """Negated mean category-score improvement over the keyword pool."""
    deltas = []
    had_before = any(c.name == category for c in before.categories)
    for scene in state.world.pools[category]:
        after_score = category_score(state, after, category, scene.grid)
        before_score = category_score(state, before, category, scene.grid) if had_before else 0.0
        deltas.append(after_score - before_score)
    return -float(np.mean(deltas)) if deltas else 0.0


# ---------------------------------------------------------------------------
# shared maintenance steps

def _pose_positive_features(state: LearnerState, pose_key: str) -> dict[str, np.ndarray]:
    pose = state.aog.pose_by_key(pose_key)
    out = {}
    for part in pose.semantic_parts():
        examples = state.part_examples.get((pose_key, part.name), [])
        feats = [
            state.extractor(state.world.scene(sid).grid, region_from_box(box))
            for sid, box in examples
        ]
        if feats:
            out[part.name] = np.stack(feats)
    return out


def _refresh_pose(state: LearnerState, pose: PoseNode) -> None:
    """Penalties from confirmed samples, then a fresh normalization.

    Invisible options stay off until some oracle answer has shown a part can
    actually be hidden; before that they would only shadow real placements.
    """
    scene_ids = state.confirmed.get(pose.key, [])
    if scene_ids and state.saw_invisible:
        grids = state.grids(scene_ids[: state.config.penalty_sample_cap])
        apply_penalties(
            pose,
            estimate_penalties(grids, pose, budget=state.config.budget, extractor=state.extractor),
        )
    calibrate_pose(pose, state.backgrounds, state.extractor, budget=state.config.budget)


def _retrain_pose_parts(state: LearnerState, pose: PoseNode, hard_negatives: dict[str, np.ndarray] | None = None) -> None:
    positives = _pose_positive_features(state, pose.key)
    if not positives:
        return
    retrain_semantic_classifiers(
        pose,
        positives,
        hard_negatives or {},
        state.backgrounds,
        state.extractor,
    )
    for part in pose.semantic_parts():
        examples = [
            (state.world.scene(sid).grid, region_from_box(box))
            for sid, box in state.part_examples.get((pose.key, part.name), [])
        ]
        if examples:
            learn_part_template(part, examples, state.extractor)
    _refresh_pose(state, pose)


def _refresh_semantic_geometry(state: LearnerState, pose: PoseNode) -> None:
    """Re-anchor pair geometry on the annotated evidence where it exists."""
    mean_regions: list[Region | None] = [None] * len(pose.parts)
    for i, part in enumerate(pose.parts):
        if part.kind != SEMANTIC:
            continue
        examples = state.part_examples.get((pose.key, part.name), [])
        if not examples:
            continue
        acc = np.zeros(4)
        for _, box in examples:
            r = region_from_box(box)
            acc += np.array([r.cx, r.cy, r.scale, r.aspect])
        cx, cy, sc, asp = acc / len(examples)
        mean_regions[i] = Region(cx=cx, cy=cy, scale=sc, aspect=asp)
    for rel in pose.pairs:
        ra, rb = mean_regions[rel.a], mean_regions[rel.b]
        if ra is not None and rb is not None and not ra.same_placement(rb):
            rel.mean_geometry = pairwise_geometry(ra, rb)


# ---------------------------------------------------------------------------
# storyline bodies (mutate state, tally the counter, no gain bookkeeping)

def _do_retrieval_pass(state: LearnerState, pose_key: str, counter: CostCounter) -> None:
    pose = state.aog.pose_by_key(pose_key)
    category = pose.category
    options = len(state.aog.category(category).poses)
    kept: list[str] = []
    for sid in state.confirmed.get(pose_key, []):
        grid = state.world.scene(sid).grid
        best_key, best_score = None, None
        for other in state.aog.category(category).poses:
            s = score_pose_on_grid(other, grid, budget=state.config.budget, extractor=state.extractor).score
            counter.rescored += 1
            if best_score is None or s > best_score:
                best_key, best_score = other.key, s
        if best_key == pose_key or options == 1:
            kept.append(sid)
        else:
            state.rejected.setdefault(pose_key, set()).add(sid)
    state.confirmed[pose_key] = kept
    state.ledger.pose(pose_key).confirmed = len(kept)

    negative_ids = sorted(state.rejected.get(pose_key, set()))
    if negative_ids:
        neg_grids = state.grids(negative_ids[: state.config.penalty_sample_cap])
        counter.rescored += len(neg_grids)
        hard = mine_hard_negatives(pose, neg_grids, state.extractor, budget=state.config.budget)
    else:
        hard = {}
    _retrain_pose_parts(state, pose, hard)


def _do_part_review(state: LearnerState, pose_key: str, counter: CostCounter) -> None:
    pose = state.aog.pose_by_key(pose_key)
    category = pose.category
    candidates = [
        s for s in state.world.pools[category] if s.scene_id not in state.annotations
    ]
    if not candidates:
        return
    if pose.latent_parts():
        dummy = build_dummy_pose(pose)
        best_sid, best_gap = None, None
        for scene in candidates:
            full = score_pose_on_grid(pose, scene.grid, budget=state.config.budget, extractor=state.extractor).score
            bare = score_pose_on_grid(dummy, scene.grid, budget=state.config.budget, extractor=state.extractor).score
            gap = full - bare
            if best_gap is None or gap > best_gap:
                best_sid, best_gap = scene.scene_id, gap
    else:
        best_sid, best_score = None, None
        for scene in candidates:
            s = score_pose_on_grid(pose, scene.grid, budget=state.config.budget, extractor=state.extractor).score
            if best_score is None or s > best_score:
                best_sid, best_score = scene.scene_id, s
    scene = state.world.scene(best_sid)

    if pose_key not in state.reviewed:
        state.reviewed.add(pose_key)
        for kind in (COMPOSITION, NAMING):
            answer = state.ask(state.next_question(kind=kind, category=category))
            state.part_names[category] = answer.names

    assignment = score_pose_on_grid(pose, scene.grid, budget=state.config.budget, extractor=state.extractor)
    boxes: dict[str, Box] = {}
    for i, part in enumerate(pose.parts):
        if part.kind != SEMANTIC:
            continue
        region = assignment.regions[i]
        proposal = region.box if region is not None else None
        answer = state.ask(
            state.next_question(
                kind=CHECK_BOX,
                category=category,
                scene_id=scene.scene_id,
                part_name=part.name,
                proposed_box=proposal,
            )
        )
        counter.part_checks += 1
        state.judgments_total += 1
        if answer.yes:
            if proposal is not None:
                boxes[part.name] = proposal
            continue
        answer = state.ask(
            state.next_question(
                kind=DRAW_BOX,
                category=category,
                scene_id=scene.scene_id,
                part_name=part.name,
            )
        )
        counter.boxes_labeled += 1
        state.boxes_total += 1
        state.boxes_by_pose[pose_key] = state.boxes_by_pose.get(pose_key, 0) + 1
        if answer.box is not None:
            boxes[part.name] = answer.box

    if boxes:
        xs0, ys0 = min(b[0] for b in boxes.values()), min(b[1] for b in boxes.values())
        xs1, ys1 = max(b[2] for b in boxes.values()), max(b[3] for b in boxes.values())
        state.annotations[scene.scene_id] = AnnotatedScene(
            scene_id=scene.scene_id,
            grid=scene.grid,
            category=category,
            object_box=(xs0, ys0, xs1, ys1),
            part_boxes=dict(boxes),
        )
        for name, box in boxes.items():
            state.part_examples.setdefault((pose_key, name), []).append((scene.scene_id, box))
    _retrain_pose_parts(state, pose)
    _refresh_semantic_geometry(state, pose)


def _quota(round_index: int) -> int:
    # grows by half each round; round-half-up keeps it integral
    return int(math.floor(3 * 1.5**round_index + 0.5))


def _do_collect_round(state: LearnerState, pose_key: str, counter: CostCounter) -> int:
    """Rank, take the quota, spot-check a few, keep the confirmed. Returns
    how many survived."""
    pose = state.aog.pose_by_key(pose_key)
    category = pose.category
    state.collect_round[pose_key] = state.collect_round.get(pose_key, 0) + 1
    quota = _quota(state.collect_round[pose_key])

    pool = state.unclaimed_pool(category, pose_key)
    scored: list[tuple[float, str]] = []
    for sid in pool:
        s = score_pose_on_grid(pose, state.world.scene(sid).grid, budget=state.config.budget, extractor=state.extractor).score
        counter.ranked += 1
        scored.append((s, sid))
    scored.sort(key=lambda t: (-t[0], t[1]))
    taken = [sid for _, sid in scored[:quota]]
    confirmed = state.confirmed.setdefault(pose_key, [])
    confirmed.extend(taken)

    checks = min(state.config.cost.sample_checks, len(taken))
    picks = [taken[int(i)] for i in state.rng.permutation(len(taken))[:checks]]
    stats = state.ledger.pose(pose_key)
    removed = 0
    for sid in picks:
        answer = state.ask(
            state.next_question(
                kind=CHECK_SAMPLE,
                category=category,
                scene_id=sid,
                anchor_scene_id=pose.anchor_scene,
            )
        )
        counter.sample_checks += 1
        state.judgments_total += 1
        stats.checks_asked += 1
        if answer.yes:
            stats.checks_yes += 1
        else:
            confirmed.remove(sid)
            state.rejected.setdefault(pose_key, set()).add(sid)
            removed += 1
    stats.confirmed = len(confirmed)
    return len(taken) - removed


def _mine_pose(state: LearnerState, pose_key: str) -> None:
    pose = state.aog.pose_by_key(pose_key)
    scene_ids = state.confirmed.get(pose_key, [])
    if not scene_ids:
        return
    grids = state.grids(scene_ids[: state.config.mining_sample_cap])
    report = mine_pose_structure(
        pose,
        grids,
        state.backgrounds,
        extractor=state.extractor,
        config=state.config.mining,
        model_invisibility=state.saw_invisible,
    )
    state.log.append(
        "mine",
        pose=pose_key,
        moves=report.accepted_moves,
        objective=[round(v, 9) for v in report.objective_trajectory],
        parts=report.part_count,
        children=report.child_counts,
    )


def _do_collect_storyline(state: LearnerState, pose_key: str, counter: CostCounter) -> None:
    _do_collect_round(state, pose_key, counter)
    _mine_pose(state, pose_key)
    _do_part_review(state, pose_key, counter)
    _do_retrieval_pass(state, pose_key, counter)


def _spawn_pose(state: LearnerState, category: str, answer: Answer) -> PoseNode:
    """Materialize a fresh pose from an exemplar demonstration."""
    cat_node = state.aog.category(category)
    pose = PoseNode(category=category, index=len(cat_node.poses), anchor_scene=answer.scene_id)
    scene = state.world.scene(answer.scene_id)
    regions: list[Region] = []
    for name in sorted(answer.boxes):
        box = answer.boxes[name]
        region = region_from_box(box)
        part = PartNode(kind=SEMANTIC, name=name, nominal_scale=region.scale, aspect=region.aspect)
        feature = state.extractor(scene.grid, region)
        window = part_window_sizes(part, (1.0,))[0]
        bg_feats = background_features(state.backgrounds, window, state.extractor)
        part.classifier = train_linear_classifier(feature[None, :], bg_feats)
        calibrate_classifier_margin(part, bg_feats)
        pose.parts.append(part)
        regions.append(region)
        state.part_examples.setdefault((pose.key, name), []).append((scene.scene_id, box))
    rebuild_pairs(pose)
    for rel in pose.pairs:
        rel.mean_geometry = pairwise_geometry(regions[rel.a], regions[rel.b])
    for part in pose.parts:
        examples = [
            (state.world.scene(sid).grid, region_from_box(box))
            for sid, box in state.part_examples.get((pose.key, part.name), [])
        ]
        learn_part_template(part, examples, state.extractor)
    cat_node.poses.append(pose)
    calibrate_pose(pose, state.backgrounds, state.extractor, budget=state.config.budget)
    state.confirmed[pose.key] = [scene.scene_id]
    state.ledger.pose(pose.key).confirmed = 1
    xs0 = min(b[0] for b in answer.boxes.values())
    ys0 = min(b[1] for b in answer.boxes.values())
    xs1 = max(b[2] for b in answer.boxes.values())
    ys1 = max(b[3] for b in answer.boxes.values())
    state.annotations[scene.scene_id] = AnnotatedScene(
        scene_id=scene.scene_id,
        grid=scene.grid,
        category=category,
        object_box=(xs0, ys0, xs1, ys1),
        part_boxes=dict(answer.boxes),
    )
    return pose


def _do_new_arrangement(state: LearnerState, category: str, counter: CostCounter) -> str | None:
    if not any(c.name == category for c in state.aog.categories):
        state.aog.categories.append(CategoryNode(name=category))
    answer = state.ask(
        state.next_question(kind=NEW_EXEMPLAR, category=category, known_anchors=state.anchors())
    )
    if answer.scene_id is None or not answer.boxes:
        # refusal: the instructor scanned the pool and found nothing new,
        # which costs a judgment, not a demonstration
        counter.sample_checks += 1
        state.judgments_total += 1
        state.ledger.category(category).exemplar_refusals += 1
        return None
    counter.exemplars += 1
    pose = _spawn_pose(state, category, answer)
    n_boxes = len(answer.boxes)
    counter.boxes_labeled += n_boxes
    state.boxes_total += n_boxes
    state.boxes_by_pose[pose.key] = state.boxes_by_pose.get(pose.key, 0) + n_boxes
    for _ in range(3):
        gained = _do_collect_round(state, pose.key, counter)
        _mine_pose(state, pose.key)
        if gained == 0:
            break
    _do_part_review(state, pose.key, counter)
    _do_retrieval_pass(state, pose.key, counter)
    return pose.key


# ---------------------------------------------------------------------------
# storyline wrapper with gain bookkeeping

def run_storyline(state: LearnerState, line: Storyline, iteration: int) -> GainRecord:
    sizes = state.pose_sizes(line)
    est_cost = predicted_cost(state.config.cost, line.kind, sizes)
    target = line.pose_key if line.pose_key is not None else line.category
    est_gains = predict_gains(state.ledger, line.kind, target)
    state.log.append(
        "storyline-start",
        iteration=iteration,
        kind=line.kind,
        target=target,
        predicted_cost=round(est_cost, 9),
        predicted_gains=[round(g, 9) for g in est_gains],
    )
    before_aog = copy.deepcopy(state.aog)
    counter = CostCounter()
    boxes_before = state.boxes_total

    new_pose_key: str | None = None
    if line.kind == KIND_RETRIEVAL:
        _do_retrieval_pass(state, line.pose_key, counter)
    elif line.kind == KIND_PART_REVIEW:
        _do_part_review(state, line.pose_key, counter)
    elif line.kind == KIND_COLLECT:
        _do_collect_storyline(state, line.pose_key, counter)
    elif line.kind == KIND_NEW_ARRANGEMENT:
        new_pose_key = _do_new_arrangement(state, line.category, counter)
    else:
        raise ValueError(f"unknown storyline kind {line.kind}")

    measured_pose = line.pose_key if line.pose_key is not None else new_pose_key
    after = measure_losses(state, state.aog, measured_pose)
    before = measure_losses(state, before_aog, line.pose_key)
    if line.kind in (KIND_COLLECT, KIND_NEW_ARRANGEMENT):
        gen_gain = _category_pool_gain(state, before_aog, state.aog, line.category)
    else:
        gen_gain = after[0] - before[0]
    gains = (gen_gain, after[1] - before[1], after[2] - before[2])

    record = GainRecord(
        iteration=iteration,
        kind=line.kind,
        category=line.category,
        pose_key=line.pose_key if line.pose_key is not None else new_pose_key,
        predicted_cost=est_cost,
        realized_cost=counter.realized_cost(state.config.cost),
        predicted_gains=est_gains,
        realized_gains=gains,
        boxes_labeled=state.boxes_total - boxes_before,
        judgments=counter.judgments,
        questions=counter.part_checks + counter.boxes_labeled + counter.sample_checks + counter.exemplars,
    )
    state.ledger.record(record)
    pose_for_losses = record.pose_key
    if pose_for_losses is not None:
        state.ledger.set_losses(pose_for_losses, after[0], after[1], after[2])
    state.log.append(
        "storyline-end",
        iteration=iteration,
        kind=line.kind,
        target=target,
        realized_cost=round(record.realized_cost, 9),
        realized_gains=[round(g, 9) for g in gains],
        boxes=record.boxes_labeled,
        judgments=record.judgments,
    )
    return record


# ---------------------------------------------------------------------------
# the loop

@dataclass
class LoopResult:
    aog: Aog
    ledger: RiskLedger
    log: EventLog
    curve: list[CurvePoint]
    state: LearnerState


def _probe_eval(state: LearnerState) -> tuple[float, float]:
    scenes = [s for cat in state.world.categories for s in state.world.probes[cat]]
    try:
        report = evaluate(state.aog, scenes, budget=state.config.eval_budget, extractor=state.extractor)
    except ValueError:
        return 0.0, 0.0
    return report.app, report.aer


def _push_curve(state: LearnerState, curve: list[CurvePoint], record: GainRecord) -> None:
    app, aer = _probe_eval(state)
    curve.append(
        CurvePoint(
            iteration=record.iteration,
            kind=record.kind,
            target=record.pose_key or record.category,
            realized_cost=record.realized_cost,
            predicted_cost=record.predicted_cost,
            cumulative_cost=state.ledger.cumulative_cost,
            cumulative_predicted_cost=state.ledger.cumulative_predicted_cost,
            gains=record.realized_gains,
            app=app,
            aer=aer,
            boxes_cumulative=state.boxes_total,
            judgments_cumulative=state.judgments_total,
        )
    )
    state.log.append("probe-eval", iteration=record.iteration, app=round(app, 9), aer=round(aer, 9))


def bootstrap(state: LearnerState, curve: list[CurvePoint], on_record=None) -> None:
    """Ask each category's composition questions and bootstrap one pose."""
    for category in state.world.categories:
        for kind in (COMPOSITION, NAMING):
            answer = state.ask(state.next_question(kind=kind, category=category))
            state.part_names[category] = answer.names
        line = Storyline(kind=KIND_NEW_ARRANGEMENT, category=category, pose_key=None)
        record = run_storyline(state, line, iteration=0)
        _push_curve(state, curve, record)
        if on_record is not None:
            on_record(state, record)


def run_learning_loop(
    world: World,
    config: EngineConfig,
    answer_source: AnswerSource,
    event_log: EventLog | None = None,
    on_record=None,
) -> LoopResult:
    """Bootstrap every category, then run the configured number of selected
    storylines. ``on_record`` fires after each completed storyline with the
    state and its gain record (the service uses it to publish snapshots)."""
    state = LearnerState(world, config, answer_source, event_log)
    state.log.append("run-start", config=config.to_dict(), world=world.config.to_dict())
    curve: list[CurvePoint] = []
    bootstrap(state, curve, on_record)
    for iteration in range(1, config.iterations + 1):
        candidates = build_candidates(
            state.ledger, state.poses_by_category(), state.config.cost, state.pose_sizes
        )
        choice = select_next_storyline(candidates)
        state.log.append(
            "select",
            iteration=iteration,
            kind=choice.storyline.kind,
            target=choice.storyline.pose_key or choice.storyline.category,
            ratio=round(choice.ratio, 9),
            probability=round(choice.probability, 9),
            cost=round(choice.cost, 9),
        )
        record = run_storyline(state, choice.storyline, iteration)
        _push_curve(state, curve, record)
        if on_record is not None:
            on_record(state, record)
    state.log.append(
        "run-end",
        iterations=config.iterations,
        cost=round(state.ledger.cumulative_cost, 9),
        boxes=state.boxes_total,
        judgments=state.judgments_total,
    )
    return LoopResult(aog=state.aog, ledger=state.ledger, log=state.log, curve=curve, state=state)
