"""Node types for the nine-layer And-Or graph, plus structural validation.

Layer map: 1 root OR over categories, 2 per-category OR over poses, 3 pose AND,
4 part OR (latent or semantic, with an invisible alternative), 5 appearance
alternatives (latent patches or the single visible semantic child), 6/8 OR over
local pattern alternatives, 7 AND splits, 9 terminal templates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LATENT = "latent"
SEMANTIC = "semantic"

OR_LAYERS = (1, 2, 4, 6, 8)
AND_LAYERS = (3, 5, 7)
TERMINAL_LAYER = 9


@dataclass
class TerminalNode:
    """Layer-9 leaf holding a local template scored by inner product."""

    template: np.ndarray
    layer: int = 9


@dataclass
class AlternativesNode:
    """Layer-6/8 OR node offering alternative local patterns."""

    layer: int
    children: list = field(default_factory=list)
    invisible_penalty: float | None = None


@dataclass
class SplitNode:
    """Layer-5/7 AND node splitting its patch into two coupled sub-regions.

    ``axis`` is 0 for a left/right split and 1 for a top/bottom split; the two
    children cover the halves in that order.
    """

    layer: int
    children: list = field(default_factory=list)
    axis: int = 0
    mean_geometry: np.ndarray | None = None
    pair_weight: float = -1.0
    miss_penalty: float = 0.0


@dataclass
class LatentChild:
    """One layer-5 appearance alternative of a latent part.

    The appearance score is ``norm_scale * ||mean_appearance - observed||^2 +
    norm_offset`` with ``norm_scale < 0`` so that residuals penalize.
    """

    mean_appearance: np.ndarray
    norm_scale: float = -1.0
    norm_offset: float = 0.0
    layer: int = 5


@dataclass
class LinearClassifier:
    """Linear decision function used for semantic part appearance."""

    weights: np.ndarray
    bias: float = 0.0

    def margin(self, feature: np.ndarray) -> float:
        return float(np.dot(self.weights, feature) + self.bias)


@dataclass
class PartNode:
    """Layer-4 OR node: one pose part, either mined (latent) or human-named (semantic)."""

    kind: str
    name: str | None = None
    children: list = field(default_factory=list)
    classifier: LinearClassifier | None = None
    margin_scale: float = 1.0
    margin_offset: float = 0.0
    invisible_penalty: float | None = None
    nominal_scale: float = 4.0
    aspect: float = 1.0
    layer: int = 4


@dataclass
class PairRelation:
    """Geometric coupling between two sibling parts under an AND node.

    ``miss_penalty`` lives in the same non-negative space as the squared
    geometry residual; it stands in for the residual when either member is
    invisible and is multiplied by ``weight`` like any other deformation value.
    """

    a: int
    b: int
    mean_geometry: np.ndarray | None = None
    weight: float = -1.0
    miss_penalty: float = 0.0


@dataclass
class PoseNode:
    """Layer-3 AND node: one pose/viewpoint decomposed into coupled parts.

    Pose nodes carry no global appearance term; their score is the normalized
    sum of part scores and pairwise deformations.
    """

    category: str
    index: int
    parts: list[PartNode] = field(default_factory=list)
    pairs: list[PairRelation] = field(default_factory=list)
    norm_scale: float = 1.0
    norm_offset: float = 0.0
    has_global_appearance: bool = False
    anchor_scene: str | None = None
    layer: int = 3

    @property
    def key(self) -> str:
        return f"{self.category}/{self.index}"

    def semantic_parts(self) -> list[PartNode]:
        return [p for p in self.parts if getattr(p, "kind", None) == SEMANTIC]

    def latent_parts(self) -> list[PartNode]:
        return [p for p in self.parts if getattr(p, "kind", None) == LATENT]


@dataclass
class CategoryNode:
    """Layer-2 OR node listing the poses of one category."""

    name: str
    poses: list[PoseNode] = field(default_factory=list)
    layer: int = 2


@dataclass
class Aog:
    """The full graph: an implicit layer-1 root OR over categories."""

    categories: list[CategoryNode] = field(default_factory=list)
    version: str = "1"
    layer: int = 1

    def poses(self) -> list[PoseNode]:
        out: list[PoseNode] = []
        for cat in self.categories:
            out.extend(cat.poses)
        return out

    def category(self, name: str) -> CategoryNode:
        for cat in self.categories:
            if cat.name == name:
                return cat
        raise KeyError(f"unknown category {name!r}")

    def pose_by_key(self, key: str) -> PoseNode:
        for pose in self.poses():
            if pose.key == key:
                return pose
        raise KeyError(f"unknown pose {key!r}")


def rebuild_pairs(pose: PoseNode) -> None:
    """Ensure every unordered part pair under the pose has a relation.

    Existing relations (their geometry, weights and penalties) are kept; new
    pairs start with no geometry and the default weight.
    """
    existing = {(min(r.a, r.b), max(r.a, r.b)): r for r in pose.pairs}
    pairs: list[PairRelation] = []
    n = len(pose.parts)
    for i in range(n):
        for j in range(i + 1, n):
            rel = existing.get((i, j))
            if rel is None:
                rel = PairRelation(a=i, b=j)
            pairs.append(rel)
    pose.pairs = pairs


def drop_part(pose: PoseNode, index: int) -> None:
    """Remove a part and remap the surviving pair relations."""
    del pose.parts[index]
    kept: list[PairRelation] = []
    for rel in pose.pairs:
        if rel.a == index or rel.b == index:
            continue
        rel.a = rel.a - 1 if rel.a > index else rel.a
        rel.b = rel.b - 1 if rel.b > index else rel.b
        kept.append(rel)
    pose.pairs = kept
    rebuild_pairs(pose)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: str


def _check_adjacency(violations: list[Violation], where: str, child, expected_cls, expected_layer: int, parent_layer: int) -> bool:
    if not isinstance(child, expected_cls):
        got_layer = getattr(child, "layer", "?")
        violations.append(
            Violation(
                code="adjacency",
                message=(
                    f"edge from layer {parent_layer} to layer {got_layer} "
                    f"(expected a layer-{expected_layer} {expected_cls if isinstance(expected_cls, tuple) else expected_cls.__name__} child)"
                ),
                where=where,
            )
        )
        return False
    if getattr(child, "layer", None) != expected_layer:
        violations.append(
            Violation(
                code="layer",
                message=f"node declares layer {getattr(child, 'layer', None)} where {expected_layer} is required",
                where=where,
            )
        )
    return True


def _validate_template(violations: list[Violation], where: str, node: SplitNode, feature_dim: int | None, dims: set[int]) -> None:
    if len(node.children) not in (0, 2):
        violations.append(Violation("split-arity", f"split node has {len(node.children)} children, expected two halves", where))
    if node.layer not in (5, 7):
        violations.append(Violation("layer", f"split node at layer {node.layer}, expected 5 or 7", where))
    if node.pair_weight > 0.0:
        violations.append(Violation("pair-weight", f"positive deformation weight {node.pair_weight}", where))
    if node.miss_penalty < 0.0:
        violations.append(Violation("penalty-sign", f"negative miss penalty {node.miss_penalty}", where))
    child_layer = node.layer + 1
    for i, alts in enumerate(node.children):
        alt_where = f"{where}/or{child_layer}[{i}]"
        if not _check_adjacency(violations, alt_where, alts, AlternativesNode, child_layer, node.layer):
            continue
        if not alts.children:
            violations.append(Violation("empty-or", "OR node has no children", alt_where))
        for j, alt in enumerate(alts.children):
            sub_where = f"{alt_where}/alt[{j}]"
            if child_layer == 6:
                if _check_adjacency(violations, sub_where, alt, SplitNode, 7, child_layer):
                    _validate_template(violations, sub_where, alt, feature_dim, dims)
            else:
                if _check_adjacency(violations, sub_where, alt, TerminalNode, 9, child_layer):
                    dims.add(int(np.asarray(alt.template).shape[0]))


def validate(aog: Aog, feature_dim: int | None = None) -> list[Violation]:
    """Walk the graph and report structural violations (empty list when clean)."""
    violations: list[Violation] = []
    dims: set[int] = set()
    seen_names: set[str] = set()
    for cat in aog.categories:
        cat_where = f"category[{cat.name}]"
        if not _check_adjacency(violations, cat_where, cat, CategoryNode, 2, 1):
            continue
        if cat.name in seen_names:
            violations.append(Violation("duplicate-category", f"category name {cat.name!r} repeats", cat_where))
        seen_names.add(cat.name)
        if not cat.poses:
            violations.append(Violation("empty-or", "category OR node has no poses", cat_where))
        for pose in cat.poses:
            pose_where = f"{cat_where}/pose[{getattr(pose, 'index', '?')}]"
            if not _check_adjacency(violations, pose_where, pose, PoseNode, 3, 2):
                continue
            if pose.has_global_appearance:
                violations.append(Violation("global-appearance", "pose nodes must not carry a global appearance term", pose_where))
            n = len(pose.parts)
            want_pairs = {(i, j) for i in range(n) for j in range(i + 1, n)}
            got_pairs = set()
            for rel in pose.pairs:
                lo, hi = min(rel.a, rel.b), max(rel.a, rel.b)
                if lo == hi or lo < 0 or hi >= n:
                    violations.append(Violation("pair-index", f"pair ({rel.a}, {rel.b}) does not join two distinct parts", pose_where))
                    continue
                got_pairs.add((lo, hi))
                if rel.weight > 0.0:
                    violations.append(Violation("pair-weight", f"positive deformation weight {rel.weight} on pair ({rel.a}, {rel.b})", pose_where))
                if rel.miss_penalty < 0.0:
                    violations.append(Violation("penalty-sign", f"negative miss penalty on pair ({rel.a}, {rel.b})", pose_where))
            missing = want_pairs - got_pairs
            if missing:
                violations.append(Violation("pairs-incomplete", f"pose is missing neighbor pairs {sorted(missing)}", pose_where))
            for pi, part in enumerate(pose.parts):
                part_where = f"{pose_where}/part[{pi}]"
                if not _check_adjacency(violations, part_where, part, PartNode, 4, 3):
                    continue
                if part.nominal_scale <= 0.0 or part.aspect <= 0.0:
                    violations.append(Violation("part-shape", "nominal scale and aspect must be positive", part_where))
                if part.invisible_penalty is None:
                    pass  # allowed before penalties are estimated
                if part.kind == SEMANTIC:
                    if part.classifier is None:
                        violations.append(Violation("semantic-classifier", "semantic part has no classifier", part_where))
                    if len(part.children) != 1:
                        violations.append(
                            Violation(
                                "semantic-children",
                                f"semantic part must have exactly one visible child, found {len(part.children)}",
                                part_where,
                            )
                        )
                    for child in part.children:
                        if _check_adjacency(violations, part_where, child, SplitNode, 5, 4) and child.children:
                            _validate_template(violations, part_where, child, feature_dim, dims)
                elif part.kind == LATENT:
                    if not part.children:
                        violations.append(Violation("latent-children", "latent part has no appearance alternatives", part_where))
                    for ci, child in enumerate(part.children):
                        child_where = f"{part_where}/alt[{ci}]"
                        if not _check_adjacency(violations, child_where, child, LatentChild, 5, 4):
                            continue
                        if child.norm_scale >= 0.0:
                            violations.append(Violation("appearance-weight", f"latent appearance weight {child.norm_scale} must be negative", child_where))
                        dims.add(int(np.asarray(child.mean_appearance).shape[0]))
                else:
                    violations.append(Violation("part-kind", f"unknown part kind {part.kind!r}", part_where))
    if feature_dim is not None:
        dims.add(int(feature_dim))
    if len(dims) > 1:
        violations.append(Violation("feature-dim", f"inconsistent feature dimensions {sorted(dims)}", "aog"))
    return violations
