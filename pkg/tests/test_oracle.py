import copy

import pytest

from aogqa.metrics import iou
from aogqa.oracle import (
    Answer,
    CHECK_BOX,
    CHECK_SAMPLE,
    COMPOSITION,
    DRAW_BOX,
    NAMING,
    NEW_EXEMPLAR,
    Question,
    SimulatedOracle,
    check_answer_kind,
    pick_exemplar,
)


def _first_relevant(world, category="cat0"):
    return next(s for s in world.pools[category] if s.truth is not None)


def _q(qid=0, kind=CHECK_BOX, **kw):
    return Question(qid=qid, kind=kind, category="cat0", **kw)


def test_question_and_answer_reject_unknown_kinds():
    with pytest.raises(ValueError):
        Question(qid=0, kind="quiz", category="cat0")
    with pytest.raises(ValueError):
        Answer(kind="quiz")


def test_composition_and_naming_list_semantic_parts(tiny_world):
    oracle = SimulatedOracle(tiny_world)
    for kind in (COMPOSITION, NAMING):
        answer = oracle.answer(_q(kind=kind))
        assert answer.names == ("part-a", "part-b")


def test_check_box_agrees_with_ground_truth(tiny_world):
    oracle = SimulatedOracle(tiny_world)
    scene = _first_relevant(tiny_world)
    truth_box = scene.truth.parts[0].box
    name = scene.truth.parts[0].name
    yes = oracle.answer(
        _q(kind=CHECK_BOX, scene_id=scene.scene_id, part_name=name, proposed_box=truth_box)
    )
    assert yes.yes is True
    no = oracle.answer(
        _q(kind=CHECK_BOX, scene_id=scene.scene_id, part_name=name, proposed_box=(0, 0, 2, 2))
    )
    assert no.yes is False


def test_check_box_accepts_absence_claims(tiny_world):
    # proposing "not visible" for a hidden part is the correct answer
    world = copy.deepcopy(tiny_world)
    scene = _first_relevant(world)
    scene.truth.parts[0].visible = False
    oracle = SimulatedOracle(world)
    name = scene.truth.parts[0].name
    answer = oracle.answer(
        _q(kind=CHECK_BOX, scene_id=scene.scene_id, part_name=name, proposed_box=None)
    )
    assert answer.yes is True


def test_check_box_requires_part_name(tiny_world):
    oracle = SimulatedOracle(tiny_world)
    scene = _first_relevant(tiny_world)
    with pytest.raises(ValueError):
        oracle.answer(_q(kind=CHECK_BOX, scene_id=scene.scene_id, proposed_box=(0, 0, 2, 2)))


def test_draw_box_returns_exact_truth(tiny_world):
    oracle = SimulatedOracle(tiny_world)
    scene = _first_relevant(tiny_world)
    part = scene.truth.parts[0]
    answer = oracle.answer(_q(kind=DRAW_BOX, scene_id=scene.scene_id, part_name=part.name))
    assert answer.box == part.box


def test_draw_box_declines_for_hidden_parts(tiny_world):
    world = copy.deepcopy(tiny_world)
    scene = _first_relevant(world)
    scene.truth.parts[0].visible = False
    oracle = SimulatedOracle(world)
    answer = oracle.answer(
        _q(kind=DRAW_BOX, scene_id=scene.scene_id, part_name=scene.truth.parts[0].name)
    )
    assert answer.box is None


def test_check_sample_compares_arrangements(tiny_world):
    oracle = SimulatedOracle(tiny_world)
    relevant = [s for s in tiny_world.pools["cat0"] if s.truth is not None]
    background = next(s for s in tiny_world.pools["cat0"] if s.truth is None)
    same = oracle.answer(
        _q(kind=CHECK_SAMPLE, scene_id=relevant[1].scene_id, anchor_scene_id=relevant[0].scene_id)
    )
    assert same.yes is True
    different = oracle.answer(
        _q(kind=CHECK_SAMPLE, scene_id=background.scene_id, anchor_scene_id=relevant[0].scene_id)
    )
    assert different.yes is False


def test_pick_exemplar_walks_pool_order(tiny_world):
    first = pick_exemplar(tiny_world, "cat0", ())
    assert first is _first_relevant(tiny_world)
    # anchoring that scene covers the only arrangement in this world
    assert pick_exemplar(tiny_world, "cat0", (first.scene_id,)) is None


def test_new_exemplar_names_only_semantic_boxes(tiny_world):
    oracle = SimulatedOracle(tiny_world)
    answer = oracle.answer(_q(kind=NEW_EXEMPLAR))
    expected = _first_relevant(tiny_world)
    assert answer.scene_id == expected.scene_id
    assert set(answer.boxes) == {"part-a", "part-b"}
    for name, box in answer.boxes.items():
        truth = next(p for p in expected.truth.parts if p.name == name)
        assert box == truth.box


def test_new_exemplar_refusal_survives_full_error(tiny_world):
    anchor = _first_relevant(tiny_world).scene_id
    oracle = SimulatedOracle(tiny_world, error_rate=1.0, seed=5)
    answer = oracle.answer(_q(kind=NEW_EXEMPLAR, known_anchors=(anchor,)))
    assert answer.scene_id is None  # refusals carry no noise to garble
    assert answer.boxes == {}


def test_full_error_rate_inverts_judgments(tiny_world):
    oracle = SimulatedOracle(tiny_world, error_rate=1.0, seed=5)
    scene = _first_relevant(tiny_world)
    part = scene.truth.parts[0]
    flipped = oracle.answer(
        _q(kind=CHECK_BOX, scene_id=scene.scene_id, part_name=part.name, proposed_box=part.box)
    )
    assert flipped.yes is False
    drawn = oracle.answer(_q(kind=DRAW_BOX, scene_id=scene.scene_id, part_name=part.name))
    assert drawn.box != part.box
    assert iou(drawn.box, part.box) > 0.0  # jitter stays within a quarter box


def test_zero_error_rate_never_draws_randomness(tiny_world):
    scene = _first_relevant(tiny_world)
    part = scene.truth.parts[0]
    draw_q = _q(kind=DRAW_BOX, scene_id=scene.scene_id, part_name=part.name)
    check_q = _q(
        kind=CHECK_BOX, scene_id=scene.scene_id, part_name=part.name, proposed_box=part.box
    )
    fresh = SimulatedOracle(tiny_world, seed=3)
    warmed = SimulatedOracle(tiny_world, seed=3)
    for _ in range(5):
        warmed.answer(check_q)
    assert warmed.answer(draw_q).box == fresh.answer(draw_q).box == part.box


def test_error_rate_bounds():
    with pytest.raises(ValueError):
        SimulatedOracle(None, error_rate=1.5)


def test_check_answer_kind_guards_shape(tiny_world):
    q = _q(kind=CHECK_BOX, scene_id="s", part_name="p")
    with pytest.raises(ValueError):
        check_answer_kind(q, Answer(kind=DRAW_BOX, box=(0, 0, 1, 1)))
    with pytest.raises(ValueError):
        check_answer_kind(q, Answer(kind=CHECK_BOX, yes=None))
    with pytest.raises(ValueError):
        check_answer_kind(_q(kind=NAMING), Answer(kind=NAMING, names=()))
    check_answer_kind(q, Answer(kind=CHECK_BOX, yes=True))
