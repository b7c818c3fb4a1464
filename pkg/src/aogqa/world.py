"""Synthetic worlds: hidden generative graphs, rendered scene pools, archives.

A world draws K categories, each with a few poses; every pose is a layout of
latent and semantic parts with fixed integer pixel sizes (so rasters are
stable) and per-part appearance templates. Rendering writes templates plus
noise onto a background grid. Keyword pools mix relevant renders with pure
background scenes at an exact, deterministic precision.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .features import GridFeatureExtractor
from .geometry import Box, Region, iround, raster_rect, region_from_box
from .nodes import (
    Aog,
    CategoryNode,
    LatentChild,
    LinearClassifier,
    PartNode,
    PoseNode,
    SplitNode,
    SEMANTIC,
    LATENT,
    rebuild_pairs,
)
from .scoring import calibrate_normalization, pairwise_geometry

MANIFEST_FORMAT = "aogqa-world/1"


@dataclass
class WorldConfig:
    """Everything a world needs to be regenerated from scratch."""

    categories: int = 2
    poses_per_category: int = 2
    latent_parts: int = 3
    semantic_parts: int = 2
    feature_dim: int = 13  # appearance channels + the height/width ratio slot
    grid_size: int = 24
    pool_size: int = 60
    probe_size: int = 10  # per (category, pose)
    precision: float = 0.7
    occlusion_rate: float = 0.0
    noise_sigma: float = 0.1
    oracle_error: float = 0.0
    geometry_jitter: float = 0.5
    object_jitter: float = 1.0
    part_pixels: int = 4
    background_sigma: float = 0.2
    clutter_count: int = 8  # distractor texture patches per scene
    contrast_jitter: float = 0.2  # per-part template dimming, up to this fraction
    seed: int = 7

    @property
    def channels(self) -> int:
        return self.feature_dim - 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "WorldConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown world config fields: {sorted(extra)}")
        return cls(**data)


@dataclass
class TruePart:
    """Hidden generator part: appearance template plus layout slot."""

    kind: str
    name: str | None
    width_px: int
    height_px: int
    offset: tuple[float, float]
    template: np.ndarray

    @property
    def scale(self) -> float:
        return math.sqrt(self.width_px * self.height_px)

    @property
    def aspect(self) -> float:
        return self.width_px / self.height_px

    def full_template(self) -> np.ndarray:
        """Template in feature space: channels plus the ratio slot."""
        return np.concatenate([self.template, [self.height_px / self.width_px]])


@dataclass
class TruePose:
    category: str
    index: int
    parts: list[TruePart]


@dataclass
class TruthPart:
    name: str | None
    kind: str
    part_index: int
    box: Box
    visible: bool


@dataclass
class GroundTruth:
    category: str
    pose_index: int
    parts: list[TruthPart]
    object_box: Box


@dataclass
class Scene:
    scene_id: str
    keyword: str
    relevant: bool
    grid: np.ndarray
    truth: GroundTruth | None


# Layout anchors keep part centers well separated inside the object span.
_ANCHORS = [
    (-5.0, -5.0), (0.0, -5.0), (5.0, -5.0),
    (-5.0, 0.0), (5.0, 0.0),
    (-5.0, 5.0), (0.0, 5.0), (5.0, 5.0),
    (0.0, 0.0),
]


class World:
    """A generated world: hidden poses, keyword pools, and probe pools."""

    def __init__(self, config: WorldConfig):
        self.config = config
        self.categories = [f"cat{k}" for k in range(config.categories)]
        self.true_poses: dict[str, list[TruePose]] = {}
        self.pools: dict[str, list[Scene]] = {}
        self.probes: dict[str, list[Scene]] = {}
        self.scenes_by_id: dict[str, Scene] = {}
        self._hidden_aog: Aog | None = None
        self._background_streak = np.random.default_rng(np.random.SeedSequence([config.seed, 0xB6]))

    def part_names(self, category: str) -> list[str]:
        pose = self.true_poses[category][0]
        return [p.name for p in pose.parts if p.kind == SEMANTIC]

    def scene(self, scene_id: str) -> Scene:
        try:
            return self.scenes_by_id[scene_id]
        except KeyError:
            raise KeyError(f"unknown scene {scene_id!r}") from None

    def render_background(self, rng: np.random.Generator | None = None) -> np.ndarray:
        cfg = self.config
        rng = rng if rng is not None else self._background_streak
        grid = rng.normal(0.0, cfg.background_sigma, size=(cfg.channels, cfg.grid_size, cfg.grid_size))
        _scatter_clutter(grid, cfg, rng, keep_out=[])
        return grid

    def hidden_aog(self) -> Aog:
        """The generator itself wired up as an inference model (cached)."""
        if self._hidden_aog is None:
            self._hidden_aog = _build_hidden_aog(self)
        return self._hidden_aog


def _draw_layout(rng: np.random.Generator, n_parts: int) -> list[tuple[float, float]]:
    anchors = list(_ANCHORS)
    picks = rng.permutation(len(anchors))[:n_parts]
    out = []
    for a in picks:
        dx, dy = anchors[int(a)]
        out.append((dx + float(rng.uniform(-1.0, 1.0)), dy + float(rng.uniform(-1.0, 1.0))))
    return out


# Templates must tell apart: a part's model may not score another part's
# patch as well as its own, even under per-scene dimming. Rejection keeps a
# minimum squared distance and a minimum own-vs-other margin between every
# template pair, stricter inside a category than across categories, plus a
# norm window so no template hides near the background or dwarfs the rest.
_RESIDUAL_GAP_SAME = 3.5
_MARGIN_GAP_SAME = 1.5
_RESIDUAL_GAP_CROSS = 2.5
_MARGIN_GAP_CROSS = 1.0
_NORM_FLOOR = 1.125  # times channel count
_NORM_CEIL = 1.5  # ceiling keeps dimmed-self residuals below the cross gaps


def _separated(t: np.ndarray, others: list[np.ndarray], residual_gap: float, margin_gap: float) -> bool:
    for other in others:
        diff = t - other
        if float(diff @ diff) < residual_gap:
            return False
        if float(t @ diff) < margin_gap or float(other @ -diff) < margin_gap:
            return False
    return True


def _draw_template(
    rng: np.random.Generator,
    channels: int,
    same_category: list[np.ndarray],
    other_categories: list[np.ndarray],
) -> np.ndarray:
    for _ in range(20000):
        t = rng.uniform(0.0, 2.0, size=channels)
        sq = float(t @ t)
        if not _NORM_FLOOR * channels <= sq <= _NORM_CEIL * channels:
            continue
        if not _separated(t, same_category, _RESIDUAL_GAP_SAME, _MARGIN_GAP_SAME):
            continue
        if not _separated(t, other_categories, _RESIDUAL_GAP_CROSS, _MARGIN_GAP_CROSS):
            continue
        return t
    raise RuntimeError("could not draw a separated template; lower the part count or gaps")


def _draw_pose(
    config: WorldConfig,
    rng: np.random.Generator,
    category: str,
    index: int,
    names: list[str],
    same_category: list[np.ndarray],
    other_categories: list[np.ndarray],
) -> TruePose:
    n_parts = config.latent_parts + config.semantic_parts
    if n_parts > len(_ANCHORS):
        raise ValueError(f"{n_parts} parts exceed the {len(_ANCHORS)} layout anchors")
    layout = _draw_layout(rng, n_parts)
    parts: list[TruePart] = []
    px = config.part_pixels
    for j in range(config.semantic_parts):
        w, h = (px + 1, max(1, px - 1)) if j % 2 == 1 else (px, px)
        template = _draw_template(rng, config.channels, same_category, other_categories)
        same_category.append(template)
        parts.append(
            TruePart(
                kind=SEMANTIC,
                name=names[j],
                width_px=w,
                height_px=h,
                offset=layout[j],
                template=template,
            )
        )
    for j in range(config.latent_parts):
        template = _draw_template(rng, config.channels, same_category, other_categories)
        same_category.append(template)
        parts.append(
            TruePart(
                kind=LATENT,
                name=None,
                width_px=px,
                height_px=px,
                offset=layout[config.semantic_parts + j],
                template=template,
            )
        )
    return TruePose(category=category, index=index, parts=parts)


# Clutter patches are smaller than part windows and weak enough that a window
# over clutter never outranks a true patch (worst case bounded by the template
# norm ceiling), yet they keep background score variance wide so detections
# land a handful of deviations up rather than astronomically high.
_CLUTTER_SIZE = 3
_CLUTTER_AMP = 1.2
_CLUTTER_KEEPOUT = 2  # cells of slack around true part rasters


def _scatter_clutter(
    grid: np.ndarray, cfg: WorldConfig, rng: np.random.Generator, keep_out: list[Box]
) -> None:
    size = _CLUTTER_SIZE
    span = cfg.grid_size - size
    inflated = [
        (b[0] - size - _CLUTTER_KEEPOUT, b[1] - size - _CLUTTER_KEEPOUT,
         b[2] + _CLUTTER_KEEPOUT, b[3] + _CLUTTER_KEEPOUT)
        for b in keep_out
    ]
    placed = 0
    for _ in range(cfg.clutter_count * 50):
        if placed >= cfg.clutter_count:
            break
        x0 = int(rng.integers(0, span + 1))
        y0 = int(rng.integers(0, span + 1))
        if any(b[0] < x0 < b[2] and b[1] < y0 < b[3] for b in inflated):
            continue
        texture = rng.uniform(0.0, _CLUTTER_AMP, size=cfg.channels)
        grid[:, y0:y0 + size, x0:x0 + size] = texture[:, None, None] + rng.normal(
            0.0, cfg.noise_sigma, size=(cfg.channels, size, size)
        )
        placed += 1


def render_scene(
    world: World,
    category: str,
    pose_index: int,
    rng: np.random.Generator,
    clean: bool = False,
) -> tuple[np.ndarray, GroundTruth]:
    """Render one relevant scene and its ground truth.

    With ``clean`` every nuisance except background texture is switched off:
    exact lattice placement, full contrast, no pixel noise, no occlusion. The
    generator graph scores such a render at least as high as any pool scene.
    """
    cfg = world.config
    pose = world.true_poses[category][pose_index]
    grid = rng.normal(0.0, cfg.background_sigma, size=(cfg.channels, cfg.grid_size, cfg.grid_size))
    center = cfg.grid_size / 2.0

    def nudge(limit: float) -> float:
        return 0.0 if clean else float(rng.uniform(-limit, limit))

    ox = center + nudge(cfg.object_jitter)
    oy = center + nudge(cfg.object_jitter)
    truth_parts: list[TruthPart] = []
    boxes: list[Box] = []
    rasters: list[tuple[int, int, int, int, int, float]] = []
    for pi, part in enumerate(pose.parts):
        cx = ox + part.offset[0] + nudge(cfg.geometry_jitter)
        cy = oy + part.offset[1] + nudge(cfg.geometry_jitter)
        box = (cx - part.width_px / 2.0, cy - part.height_px / 2.0, cx + part.width_px / 2.0, cy + part.height_px / 2.0)
        x0, y0, x1, y1 = raster_rect(box, cfg.grid_size, cfg.grid_size)
        raster: Box = (float(x0), float(y0), float(x1), float(y1))
        occluded = not clean and cfg.occlusion_rate > 0.0 and rng.uniform() < cfg.occlusion_rate
        contrast = 1.0 if clean else 1.0 - float(rng.uniform(0.0, cfg.contrast_jitter))
        truth_parts.append(TruthPart(name=part.name, kind=part.kind, part_index=pi, box=raster, visible=not occluded))
        boxes.append(raster)
        if not occluded:
            rasters.append((x0, y0, x1, y1, pi, contrast))
    _scatter_clutter(grid, cfg, rng, keep_out=boxes)
    for x0, y0, x1, y1, pi, contrast in rasters:
        patch = contrast * pose.parts[pi].template[:, None, None]
        grid[:, y0:y1, x0:x1] = patch if clean else patch + rng.normal(
            0.0, cfg.noise_sigma, size=(cfg.channels, y1 - y0, x1 - x0)
        )
    object_box = (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )
    return grid, GroundTruth(category=category, pose_index=pose_index, parts=truth_parts, object_box=object_box)


def _fill_pool(world: World, category: str, prefix: str, count: int, relevant_count: int, rng: np.random.Generator) -> list[Scene]:
    cfg = world.config
    flags = np.zeros(count, dtype=bool)
    flags[:relevant_count] = True
    rng.shuffle(flags)
    scenes: list[Scene] = []
    pose_cycle = 0
    for i in range(count):
        scene_id = f"{prefix}-{i:03d}"
        if flags[i]:
            pose_index = pose_cycle % cfg.poses_per_category
            pose_cycle += 1
            grid, truth = render_scene(world, category, pose_index, rng)
            scene = Scene(scene_id=scene_id, keyword=category, relevant=True, grid=grid, truth=truth)
        else:
            grid = rng.normal(0.0, cfg.background_sigma, size=(cfg.channels, cfg.grid_size, cfg.grid_size))
            _scatter_clutter(grid, cfg, rng, keep_out=[])
            scene = Scene(scene_id=scene_id, keyword=category, relevant=False, grid=grid, truth=None)
        scenes.append(scene)
        world.scenes_by_id[scene_id] = scene
    return scenes


def generate_world(config: WorldConfig) -> World:
    """Deterministically build the whole world from its config."""
    world = World(config)
    root = np.random.SeedSequence(config.seed)
    structure_rng = np.random.default_rng(root.spawn(1)[0])
    names = [f"part-{chr(ord('a') + j)}" for j in range(config.semantic_parts)]
    foreign: list[np.ndarray] = []
    for category in world.categories:
        accepted: list[np.ndarray] = []
        world.true_poses[category] = [
            _draw_pose(config, structure_rng, category, idx, names, accepted, foreign)
            for idx in range(config.poses_per_category)
        ]
        foreign.extend(accepted)
    relevant = iround(config.precision * config.pool_size)
    for k, category in enumerate(world.categories):
        pool_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1, k]))
        world.pools[category] = _fill_pool(world, category, category, config.pool_size, relevant, pool_rng)
        probe_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2, k]))
        probe_count = config.probe_size * config.poses_per_category
        world.probes[category] = _fill_pool(
            world, category, f"{category}-probe", probe_count, probe_count, probe_rng
        )
    return world


def _build_hidden_aog(world: World) -> Aog:
    """Wire the generator's own templates into a scoring-ready graph."""
    cfg = world.config
    extractor = GridFeatureExtractor()
    calib_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xCA]))
    backgrounds = [world.render_background(calib_rng) for _ in range(48)]
    aog = Aog()
    for category in world.categories:
        cat_node = CategoryNode(name=category)
        for true_pose in world.true_poses[category]:
            pose = PoseNode(category=category, index=true_pose.index)
            center = cfg.grid_size / 2.0
            nominal_regions: list[Region] = []
            for part in true_pose.parts:
                target = part.full_template()
                # Appearance residuals against random background placements.
                residuals = []
                margins = []
                for bg in backgrounds:
                    for _ in range(8):
                        w, h = part.width_px, part.height_px
                        x0 = int(calib_rng.integers(0, cfg.grid_size - w + 1))
                        y0 = int(calib_rng.integers(0, cfg.grid_size - h + 1))
                        feat = extractor(bg, region_from_box((x0, y0, x0 + w, y0 + h)))
                        diff = target - feat
                        residuals.append(float(np.dot(diff, diff)))
                        margins.append(float(np.dot(target, feat) - np.dot(target, target) / 2.0))
                node = PartNode(
                    kind=part.kind,
                    name=part.name,
                    nominal_scale=part.scale,
                    aspect=part.aspect,
                )
                if part.kind == LATENT:
                    w_cal, b_cal = calibrate_normalization([-r for r in residuals])
                    node.children = [LatentChild(mean_appearance=target, norm_scale=-w_cal, norm_offset=b_cal)]
                else:
                    node.classifier = LinearClassifier(weights=target.copy(), bias=-float(np.dot(target, target)) / 2.0)
                    m_cal, mb_cal = calibrate_normalization(margins)
                    node.margin_scale = m_cal
                    node.margin_offset = mb_cal
                    node.children = [SplitNode(layer=5)]
                pose.parts.append(node)
                nominal_regions.append(
                    Region(
                        cx=center + part.offset[0],
                        cy=center + part.offset[1],
                        scale=part.scale,
                        aspect=part.aspect,
                    )
                )
            rebuild_pairs(pose)
            for rel in pose.pairs:
                rel.mean_geometry = pairwise_geometry(nominal_regions[rel.a], nominal_regions[rel.b])
            cat_node.poses.append(pose)
        aog.categories.append(cat_node)
    _calibrate_hidden(world, aog, backgrounds)
    return aog


def _calibrate_hidden(world: World, aog: Aog, backgrounds: list[np.ndarray]) -> None:
    """Pose normalization, plus invisibility penalties when parts can hide.

    In a world that never occludes, an invisible option would only compete
    with genuine placements, so the generator models invisibility exactly
    when the occlusion rate says parts can actually go missing.
    """
    from .learning import apply_penalties, calibrate_pose, estimate_penalties

    extractor = GridFeatureExtractor()
    sample_rng = np.random.default_rng(np.random.SeedSequence([world.config.seed, 0xCB]))
    for pose in aog.poses():
        if world.config.occlusion_rate > 0.0:
            samples = [
                (render_scene(world, pose.category, pose.index, sample_rng)[0]) for _ in range(24)
            ]
            estimate = estimate_penalties(samples, pose, budget=4, extractor=extractor)
            apply_penalties(pose, estimate)
        calibrate_pose(pose, backgrounds, extractor, budget=4)


def _encode_grid(grid: np.ndarray) -> dict:
    data = np.ascontiguousarray(grid, dtype=np.float64)
    return {
        "dtype": "float64",
        "shape": list(data.shape),
        "b64": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode_grid(doc: dict) -> np.ndarray:
    raw = base64.b64decode(doc["b64"])
    return np.frombuffer(raw, dtype=np.dtype(doc["dtype"])).reshape(doc["shape"]).copy()


def _truth_to_doc(truth: GroundTruth | None) -> dict | None:
    if truth is None:
        return None
    return {
        "category": truth.category,
        "pose_index": truth.pose_index,
        "object_box": list(truth.object_box),
        "parts": [
            {
                "name": p.name,
                "kind": p.kind,
                "part_index": p.part_index,
                "box": list(p.box),
                "visible": p.visible,
            }
            for p in truth.parts
        ],
    }


def _truth_from_doc(doc: dict | None) -> GroundTruth | None:
    if doc is None:
        return None
    return GroundTruth(
        category=doc["category"],
        pose_index=doc["pose_index"],
        object_box=tuple(doc["object_box"]),
        parts=[
            TruthPart(
                name=p["name"],
                kind=p["kind"],
                part_index=p["part_index"],
                box=tuple(p["box"]),
                visible=p["visible"],
            )
            for p in doc["parts"]
        ],
    )


def save_world(world: World, out_dir: str | Path) -> None:
    """Write the manifest plus one archive per pool; all regenerable from seeds."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": MANIFEST_FORMAT,
        "config": world.config.to_dict(),
        "pools": {},
    }
    for label, pools in (("pool", world.pools), ("probe", world.probes)):
        for category, scenes in pools.items():
            name = f"{label}-{category}.json"
            manifest["pools"][name] = {"category": category, "role": label, "count": len(scenes)}
            doc = {
                "format": "aogqa-scenes/1",
                "category": category,
                "role": label,
                "scenes": [
                    {
                        "scene_id": s.scene_id,
                        "keyword": s.keyword,
                        "relevant": s.relevant,
                        "grid": _encode_grid(s.grid),
                        "truth": _truth_to_doc(s.truth),
                    }
                    for s in scenes
                ],
            }
            (out / name).write_text(json.dumps(doc, sort_keys=True))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_world(out_dir: str | Path) -> World:
    """Regenerate the world from a saved manifest."""
    manifest = json.loads((Path(out_dir) / "manifest.json").read_text())
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"unsupported manifest format {manifest.get('format')!r}")
    return generate_world(WorldConfig.from_dict(manifest["config"]))


def read_scene_archive(path: str | Path) -> list[Scene]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "aogqa-scenes/1":
        raise ValueError(f"unsupported scene archive format {doc.get('format')!r}")
    return [
        Scene(
            scene_id=s["scene_id"],
            keyword=s["keyword"],
            relevant=s["relevant"],
            grid=_decode_grid(s["grid"]),
            truth=_truth_from_doc(s["truth"]),
        )
        for s in doc["scenes"]
    ]
