"""Questions, answers, and the simulated annotator.

Six question kinds, named by what they ask:

- ``composition``   which semantic parts make up this category's object
- ``naming``        canonical names for those parts
- ``check-box``     yes/no on one proposed part placement in a scene
- ``draw-box``      request the correct box for a named part in a scene
- ``check-sample``  yes/no: does this scene show the same arrangement as the anchor
- ``new-exemplar``  pick a fresh scene showing an arrangement we have not modeled,
                    with boxes for every semantic part

The simulated annotator answers from world ground truth. With error rate
zero it draws nothing from its generator, so a scripted client answering
from the same ground truth is indistinguishable record for record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, box_center
from .metrics import iou
from .world import Scene, World

COMPOSITION = "composition"
NAMING = "naming"
CHECK_BOX = "check-box"
DRAW_BOX = "draw-box"
CHECK_SAMPLE = "check-sample"
NEW_EXEMPLAR = "new-exemplar"

QUESTION_KINDS = (COMPOSITION, NAMING, CHECK_BOX, DRAW_BOX, CHECK_SAMPLE, NEW_EXEMPLAR)

YES_NO_KINDS = (CHECK_BOX, CHECK_SAMPLE)
BOX_KINDS = (DRAW_BOX,)
LIST_KINDS = (COMPOSITION, NAMING)


@dataclass(frozen=True)
class Question:
    qid: int
    kind: str
    category: str
    scene_id: str | None = None
    part_name: str | None = None
    proposed_box: Box | None = None
    anchor_scene_id: str | None = None
    known_anchors: tuple[str, ...] = ()
    prompt: str = ""

    def __post_init__(self):
        if self.kind not in QUESTION_KINDS:
            raise ValueError(f"unknown question kind {self.kind!r}")


@dataclass(frozen=True)
class Answer:
    kind: str
    yes: bool | None = None
    names: tuple[str, ...] = ()
    box: Box | None = None
    scene_id: str | None = None
    boxes: dict[str, Box] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in QUESTION_KINDS:
            raise ValueError(f"unknown answer kind {self.kind!r}")


class AnswerSource:
    """Anything that can answer questions: oracle or a live session bridge."""

    def answer(self, question: Question) -> Answer:  # pragma: no cover - interface
        raise NotImplementedError


def _truth_box(scene: Scene, part_name: str) -> tuple[Box | None, bool]:
    """(box, visible) for a named semantic part; (None, False) if absent."""
    if scene.truth is None:
        return None, False
    for part in scene.truth.parts:
        if part.name == part_name:
            return part.box, part.visible
    return None, False


def _matches_truth(scene: Scene, part_name: str, proposed: Box | None) -> bool:
    box, visible = _truth_box(scene, part_name)
    if proposed is None:
        return not visible or box is None
    if box is None or not visible:
        return False
    return iou(proposed, box) > 0.5


def pick_exemplar(world: World, category: str, known_anchors: tuple[str, ...]) -> Scene | None:
    """First fully visible relevant scene whose true arrangement is not yet anchored.

    Deterministic by pool order so a scripted client can reproduce the choice.
    """
    covered = set()
    for anchor_id in known_anchors:
        anchor = world.scenes_by_id.get(anchor_id)
        if anchor is not None and anchor.truth is not None:
            covered.add((anchor.truth.category, anchor.truth.pose_index))
    for scene in world.pools[category]:
        if scene.truth is None:
            continue
        if (scene.truth.category, scene.truth.pose_index) in covered:
            continue
        if all(p.visible for p in scene.truth.parts):
            return scene
    return None


class SimulatedOracle(AnswerSource):
    """Ground-truth annotator with an optional error rate.

    Errors flip yes/no answers and jitter requested boxes by up to a quarter
    of the part size. At error rate zero no random draws happen at all.
    """

    def __init__(self, world: World, error_rate: float = 0.0, seed: int = 0):
        if not 0.0 <= error_rate <= 1.0:
            raise ValueError("error rate must lie in [0, 1]")
        self.world = world
        self.error_rate = error_rate
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, 0x0E]))

    def _garble(self) -> bool:
        return self.error_rate > 0.0 and float(self._rng.uniform()) < self.error_rate

    def _jitter_box(self, box: Box) -> Box:
        w = box[2] - box[0]
        h = box[3] - box[1]
        dx = float(self._rng.uniform(-0.25, 0.25)) * w
        dy = float(self._rng.uniform(-0.25, 0.25)) * h
        return (box[0] + dx, box[1] + dy, box[2] + dx, box[3] + dy)

    def answer(self, question: Question) -> Answer:
        kind = question.kind
        world = self.world
        if kind in LIST_KINDS:
            return Answer(kind=kind, names=tuple(world.part_names(question.category)))
        if kind == CHECK_BOX:
            scene = world.scene(question.scene_id)
            if question.part_name is None:
                raise ValueError("check-box question needs a part name")
            truth = _matches_truth(scene, question.part_name, question.proposed_box)
            if self._garble():
                truth = not truth
            return Answer(kind=kind, yes=truth)
        if kind == DRAW_BOX:
            scene = world.scene(question.scene_id)
            if question.part_name is None:
                raise ValueError("draw-box question needs a part name")
            box, visible = _truth_box(scene, question.part_name)
            if box is None or not visible:
                return Answer(kind=kind, box=None)
            if self._garble():
                box = self._jitter_box(box)
            return Answer(kind=kind, box=box)
        if kind == CHECK_SAMPLE:
            scene = world.scene(question.scene_id)
            anchor = world.scene(question.anchor_scene_id)
            same = (
                scene.truth is not None
                and anchor.truth is not None
                and scene.truth.category == anchor.truth.category
                and scene.truth.pose_index == anchor.truth.pose_index
            )
            if self._garble():
                same = not same
            return Answer(kind=kind, yes=same)
        if kind == NEW_EXEMPLAR:
            scene = pick_exemplar(world, question.category, question.known_anchors)
            if scene is None:
                return Answer(kind=kind, scene_id=None)
            boxes: dict[str, Box] = {}
            for part in scene.truth.parts:
                if part.name is None:
                    continue
                box = part.box
                if self._garble():
                    box = self._jitter_box(box)
                boxes[part.name] = box
            return Answer(kind=kind, scene_id=scene.scene_id, boxes=boxes)
        raise ValueError(f"unknown question kind {kind!r}")


def check_answer_kind(question: Question, answer: Answer) -> None:
    """Raise if the answer cannot possibly belong to the question."""
    if question.kind != answer.kind:
        raise ValueError(f"answer kind {answer.kind!r} does not match question kind {question.kind!r}")
    if question.kind in YES_NO_KINDS and answer.yes is None:
        raise ValueError(f"{question.kind} needs a yes/no answer")
    if question.kind in LIST_KINDS and not answer.names:
        raise ValueError(f"{question.kind} needs a list of names")
