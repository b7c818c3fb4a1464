"""Annotation cost model and storyline catalogue.

Four storyline kinds, named by what they do:

1. re-examine retrieval: rescore the confirmed pool, mine hard negatives,
   retrain part classifiers (computer only, cheap per scene-pose rescore)
2. review parts: show the annotator one parsed scene, confirm or fix each
   semantic part box
3. grow the pool: rank the keyword pool, collect a quota of new samples,
   spot-check a few, remine the structure
4. new arrangement: ask for an exemplar of an unmodeled arrangement and
   bootstrap a fresh pose from it

Predicted costs follow fixed linear formulas in the pool sizes; realized
costs count what was actually asked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .oracle import CHECK_BOX, CHECK_SAMPLE, COMPOSITION, DRAW_BOX, NAMING, NEW_EXEMPLAR

KIND_RETRIEVAL = 1
KIND_PART_REVIEW = 2
KIND_COLLECT = 3
KIND_NEW_ARRANGEMENT = 4

KINDS = (KIND_RETRIEVAL, KIND_PART_REVIEW, KIND_COLLECT, KIND_NEW_ARRANGEMENT)

PARTICIPANTS = {
    KIND_RETRIEVAL: "computer",
    KIND_PART_REVIEW: "user",
    KIND_COLLECT: "user+computer",
    KIND_NEW_ARRANGEMENT: "instructor",
}

QUESTION_SETS = {
    KIND_RETRIEVAL: (),
    KIND_PART_REVIEW: (COMPOSITION, NAMING, CHECK_BOX, DRAW_BOX),
    KIND_COLLECT: (CHECK_SAMPLE, CHECK_BOX, DRAW_BOX),
    KIND_NEW_ARRANGEMENT: (NEW_EXEMPLAR, CHECK_SAMPLE, CHECK_BOX, DRAW_BOX),
}

# which loss components each storyline kind is expected to move:
# (generative, category, part)
GAIN_COMPONENTS = {
    KIND_RETRIEVAL: (0, 1, 0),
    KIND_PART_REVIEW: (0, 1, 1),
    KIND_COLLECT: (1, 1, 1),
    KIND_NEW_ARRANGEMENT: (1, 0, 0),
}


@dataclass(frozen=True)
class Storyline:
    kind: int
    category: str
    pose_key: str | None = None  # None for new-arrangement storylines

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown storyline kind {self.kind}")
        if self.kind != KIND_NEW_ARRANGEMENT and self.pose_key is None:
            raise ValueError(f"kind {self.kind} targets a specific pose")

    @property
    def participant(self) -> str:
        return PARTICIPANTS[self.kind]

    @property
    def questions(self) -> tuple[str, ...]:
        return QUESTION_SETS[self.kind]

    def label(self) -> str:
        return f"kind{self.kind}:{self.pose_key or self.category}"


@dataclass
class CostModel:
    """Per-interaction labor prices plus the spot-check budget."""

    check_part: float = 1.0
    check_object: float = 1.0
    label_part: float = 5.0
    retrieval: float = 0.01
    collect: float = 0.01
    demonstrate_pose: float = 50.0
    sample_checks: int = 10
    v_category: float = 1.0
    v_part: float = 1.0

    def __post_init__(self):
        for name in (
            "check_part",
            "check_object",
            "label_part",
            "retrieval",
            "collect",
            "demonstrate_pose",
            "v_category",
            "v_part",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.sample_checks < 0:
            raise ValueError("sample_checks must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "check_part": self.check_part,
            "check_object": self.check_object,
            "label_part": self.label_part,
            "retrieval": self.retrieval,
            "collect": self.collect,
            "demonstrate_pose": self.demonstrate_pose,
            "sample_checks": self.sample_checks,
            "v_category": self.v_category,
            "v_part": self.v_part,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CostModel":
        return cls(**data)


@dataclass(frozen=True)
class PoolSizes:
    """The pool statistics the cost formulas are linear in."""

    confirmed: int  # confirmed samples for the target pose
    pose_options: int  # arrangements considered when re-examining retrieval
    category_pool: int  # size of the keyword pool
    semantic_parts: int  # semantic parts of the target pose


def predicted_cost(model: CostModel, kind: int, sizes: PoolSizes) -> float:
    """A-priori storyline price from the fixed linear formulas."""
    re_examine = model.retrieval * sizes.confirmed * sizes.pose_options
    collect_pool = model.collect * sizes.category_pool
    spot_check = model.check_object * model.sample_checks
    review = model.check_part * sizes.semantic_parts
    label = model.label_part * sizes.semantic_parts
    if kind == KIND_RETRIEVAL:
        return re_examine
    if kind == KIND_PART_REVIEW:
        return review + label
    if kind == KIND_COLLECT:
        return collect_pool + spot_check + review + label + re_examine
    if kind == KIND_NEW_ARRANGEMENT:
        return model.demonstrate_pose + 3 * collect_pool + 3 * spot_check + label + re_examine
    raise ValueError(f"unknown storyline kind {kind}")


@dataclass
class CostCounter:
    """Tallies what actually happened during one storyline."""

    part_checks: int = 0  # box confirmations shown to the annotator
    boxes_labeled: int = 0  # boxes the annotator had to draw
    sample_checks: int = 0  # sample yes/no judgments
    exemplars: int = 0  # full arrangement demonstrations
    rescored: int = 0  # machine scene-times-pose rescores
    ranked: int = 0  # machine pool rankings (scenes scored for collection)

    def realized_cost(self, model: CostModel) -> float:
        return (
            model.check_part * self.part_checks
            + model.label_part * self.boxes_labeled
            + model.check_object * self.sample_checks
            + model.demonstrate_pose * self.exemplars
            + model.retrieval * self.rescored
            + model.collect * self.ranked
        )

    @property
    def judgments(self) -> int:
        """Yes/no style interactions (for the cheap labor accounting)."""
        return self.part_checks + self.sample_checks

    def merge(self, other: "CostCounter") -> None:
        self.part_checks += other.part_checks
        self.boxes_labeled += other.boxes_labeled
        self.sample_checks += other.sample_checks
        self.exemplars += other.exemplars
        self.rescored += other.rescored
        self.ranked += other.ranked
