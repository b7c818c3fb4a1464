import numpy as np
import pytest

from aogqa.inference import detect_best_object
from aogqa.metrics import iou
from aogqa.nodes import validate
from aogqa.world import (
    WorldConfig,
    generate_world,
    load_world,
    read_scene_archive,
    render_scene,
    save_world,
)


def _small_config(**kw):
    base = dict(categories=1, poses_per_category=1, pool_size=8, probe_size=2, seed=5)
    base.update(kw)
    return WorldConfig(**base)


def test_config_round_trip_and_unknown_fields():
    cfg = _small_config(precision=0.5)
    assert WorldConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        WorldConfig.from_dict({"categories": 1, "mystery": 2})


def test_channels_leave_room_for_the_ratio_slot():
    assert WorldConfig(feature_dim=13).channels == 12


def test_generation_is_deterministic():
    a = generate_world(_small_config())
    b = generate_world(_small_config())
    assert [s.scene_id for s in a.pools["cat0"]] == [s.scene_id for s in b.pools["cat0"]]
    for sa, sb in zip(a.pools["cat0"], b.pools["cat0"]):
        assert np.array_equal(sa.grid, sb.grid)
        assert (sa.truth is None) == (sb.truth is None)
        if sa.truth is not None:
            assert [p.box for p in sa.truth.parts] == [p.box for p in sb.truth.parts]


def test_scene_ids_and_pool_shapes(tiny_world):
    cfg = tiny_world.config
    pool = tiny_world.pools["cat0"]
    assert [s.scene_id for s in pool] == [f"cat0-{i:03d}" for i in range(cfg.pool_size)]
    probes = tiny_world.probes["cat0"]
    assert [s.scene_id for s in probes] == [
        f"cat0-probe-{i:03d}" for i in range(cfg.probe_size * cfg.poses_per_category)
    ]
    assert all(s.grid.shape == (cfg.channels, cfg.grid_size, cfg.grid_size) for s in pool)
    for scene in pool:
        assert tiny_world.scene(scene.scene_id) is scene
    with pytest.raises(KeyError):
        tiny_world.scene("nope-000")


def test_precision_sets_the_relevant_count(tiny_world):
    cfg = tiny_world.config
    relevant = [s for s in tiny_world.pools["cat0"] if s.relevant]
    assert len(relevant) == round(cfg.precision * cfg.pool_size)
    assert all(s.truth is not None for s in relevant)
    assert all(s.truth is None for s in tiny_world.pools["cat0"] if not s.relevant)
    # probes are all relevant by construction
    assert all(s.relevant for s in tiny_world.probes["cat0"])


def test_part_names_are_stable(tiny_world):
    assert tiny_world.part_names("cat0") == ["part-a", "part-b"]


def test_hidden_aog_is_valid_and_cached(tiny_world):
    aog = tiny_world.hidden_aog()
    assert aog is tiny_world.hidden_aog()
    assert validate(aog, feature_dim=tiny_world.config.feature_dim) == []
    keys = [pose.key for pose in aog.poses()]
    assert keys == ["cat0/0"]


def test_clean_render_is_fully_visible_and_reproducible(tiny_world):
    grid1, truth1 = render_scene(tiny_world, "cat0", 0, np.random.default_rng(2), clean=True)
    grid2, truth2 = render_scene(tiny_world, "cat0", 0, np.random.default_rng(2), clean=True)
    assert np.array_equal(grid1, grid2)
    assert all(p.visible for p in truth1.parts)
    assert [p.box for p in truth1.parts] == [p.box for p in truth2.parts]
    x0, y0, x1, y1 = truth1.object_box
    assert 0 <= x0 < x1 <= tiny_world.config.grid_size
    assert 0 <= y0 < y1 <= tiny_world.config.grid_size


@pytest.mark.parametrize("seed", [3, 5])
def test_generator_explains_its_own_clean_renders(seed, extractor):
    """The hidden graph must localize every semantic part it just drew."""
    world = generate_world(_small_config(seed=seed))
    grid, truth = render_scene(world, "cat0", 0, np.random.default_rng(0), clean=True)
    parse = detect_best_object(
        world.hidden_aog(), grid, truth.object_box, budget=4, extractor=extractor
    )
    states = {p.name: p for p in parse.parts if p.name is not None}
    for part in truth.parts:
        if part.name is None:
            continue
        state = states[part.name]
        assert state.visible and state.region is not None
        assert iou(state.region.box, part.box) > 0.5


def test_occlusion_hides_parts_and_arms_penalties():
    world = generate_world(_small_config(seed=11, occlusion_rate=0.5, pool_size=10))
    truth_parts = [
        p
        for s in world.pools["cat0"]
        if s.truth is not None
        for p in s.truth.parts
    ]
    assert any(not p.visible for p in truth_parts)
    assert any(p.visible for p in truth_parts)
    pose = world.hidden_aog().poses()[0]
    assert all(p.invisible_penalty is not None for p in pose.parts)


def test_no_occlusion_means_no_invisible_options(tiny_world):
    pose = tiny_world.hidden_aog().poses()[0]
    assert all(p.invisible_penalty is None for p in pose.parts)


def test_save_and_load_round_trip(tiny_world, tmp_path):
    save_world(tiny_world, tmp_path)
    again = load_world(tmp_path)
    assert again.config == tiny_world.config
    for sa, sb in zip(tiny_world.pools["cat0"], again.pools["cat0"]):
        assert sa.scene_id == sb.scene_id
        assert np.array_equal(sa.grid, sb.grid)

    archived = read_scene_archive(tmp_path / "pool-cat0.json")
    assert [s.scene_id for s in archived] == [s.scene_id for s in tiny_world.pools["cat0"]]
    for original, copy in zip(tiny_world.pools["cat0"], archived):
        assert np.array_equal(original.grid, copy.grid)
        if original.truth is None:
            assert copy.truth is None
        else:
            assert copy.truth.category == original.truth.category
            assert [p.box for p in copy.truth.parts] == [
                tuple(p.box) for p in original.truth.parts
            ]


def test_load_rejects_foreign_manifest(tmp_path):
    (tmp_path / "manifest.json").write_text('{"format": "other/1"}')
    with pytest.raises(ValueError):
        load_world(tmp_path)
