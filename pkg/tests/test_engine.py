import copy
import json

import pytest

from aogqa.costs import KIND_NEW_ARRANGEMENT, Storyline
from aogqa.engine import (
    EngineConfig,
    LearnerState,
    build_dummy_pose,
    category_score,
    measure_losses,
    run_learning_loop,
    run_storyline,
    _quota,
)
from aogqa.learning import MiningConfig
from aogqa.nodes import Aog, LATENT, SEMANTIC, validate
from aogqa.oracle import COMPOSITION, DRAW_BOX, SimulatedOracle
from aogqa.selection import build_candidates


def _engine_config(**kw):
    base = dict(
        iterations=2,
        background_count=4,
        mining_sample_cap=6,
        seed=0,
        mining=MiningConfig(max_moves=4),
    )
    base.update(kw)
    return EngineConfig(**base)


@pytest.fixture(scope="module")
def tiny_run(tiny_world):
    config = _engine_config()
    oracle = SimulatedOracle(tiny_world, seed=config.seed)
    return run_learning_loop(tiny_world, config, oracle)


# -- small pure helpers -------------------------------------------------------

def test_quota_grows_by_half_each_round():
    assert [_quota(k) for k in (0, 1, 2, 3)] == [3, 5, 7, 10]


def test_build_dummy_pose_strips_semantic_parts(tiny_world):
    pose = tiny_world.hidden_aog().poses()[0]
    n_latent = len(pose.latent_parts())
    dummy = build_dummy_pose(pose)
    assert all(p.kind == LATENT for p in dummy.parts)
    assert len(dummy.parts) == n_latent
    assert len(dummy.pairs) == n_latent * (n_latent - 1) // 2
    # the source pose keeps its semantic parts
    assert any(p.kind == SEMANTIC for p in pose.parts)


def test_build_dummy_pose_needs_latent_support(tiny_world):
    pose = copy.deepcopy(tiny_world.hidden_aog().poses()[0])
    pose.parts = [p for p in pose.parts if p.kind == SEMANTIC]
    with pytest.raises(ValueError):
        build_dummy_pose(pose)


def test_category_score_defaults_to_zero_for_unknown(tiny_world):
    config = _engine_config()
    state = LearnerState(tiny_world, config, SimulatedOracle(tiny_world))
    grid = tiny_world.pools["cat0"][0].grid
    assert category_score(state, Aog(), "cat0", grid) == 0.0


def test_measure_losses_is_zero_before_any_evidence(tiny_world):
    state = LearnerState(tiny_world, _engine_config(), SimulatedOracle(tiny_world))
    assert measure_losses(state, Aog(), None) == (0.0, 0.0, 0.0)


# -- question plumbing ----------------------------------------------------------

def test_ask_logs_question_and_answer(tiny_world):
    state = LearnerState(tiny_world, _engine_config(), SimulatedOracle(tiny_world))
    answer = state.ask(state.next_question(kind=COMPOSITION, category="cat0"))
    assert answer.names == ("part-a", "part-b")
    q_events = state.log.of_type("question")
    a_events = state.log.of_type("answer")
    assert len(q_events) == len(a_events) == 1
    assert q_events[0]["qid"] == a_events[0]["qid"] == 1
    assert state.saw_invisible is False


def test_declined_draw_box_arms_invisibility(tiny_world):
    world = copy.deepcopy(tiny_world)
    scene = next(s for s in world.pools["cat0"] if s.truth is not None)
    scene.truth.parts[0].visible = False
    state = LearnerState(world, _engine_config(), SimulatedOracle(world))
    state.ask(
        state.next_question(
            kind=DRAW_BOX,
            category="cat0",
            scene_id=scene.scene_id,
            part_name=scene.truth.parts[0].name,
        )
    )
    assert state.saw_invisible is True


# -- a short full run --------------------------------------------------------------

def test_loop_emits_one_curve_point_per_storyline(tiny_run, tiny_world):
    # one bootstrap record per category plus one per iteration
    assert len(tiny_run.curve) == len(tiny_world.categories) + 2
    assert tiny_run.curve[0].iteration == 0
    assert [p.iteration for p in tiny_run.curve[1:]] == [1, 2]
    assert len(tiny_run.ledger.records) == len(tiny_run.curve)


def test_loop_box_and_judgment_accounting(tiny_run):
    state = tiny_run.state
    assert state.boxes_total == sum(r.boxes_labeled for r in tiny_run.ledger.records)
    assert state.judgments_total == sum(r.judgments for r in tiny_run.ledger.records)
    final = tiny_run.curve[-1]
    assert final.boxes_cumulative == state.boxes_total
    assert final.judgments_cumulative == state.judgments_total
    assert sum(state.boxes_by_pose.values()) == state.boxes_total


def test_loop_cost_accumulates_monotonically(tiny_run):
    costs = [p.cumulative_cost for p in tiny_run.curve]
    assert all(b >= a for a, b in zip(costs, costs[1:]))
    assert costs[-1] == pytest.approx(sum(r.realized_cost for r in tiny_run.ledger.records))


def test_loop_learned_graph_is_structurally_valid(tiny_run, tiny_world):
    problems = validate(tiny_run.aog, feature_dim=tiny_world.config.feature_dim)
    assert problems == []
    assert [c.name for c in tiny_run.aog.categories] == ["cat0"]
    assert len(tiny_run.aog.poses()) >= 1


def test_loop_keeps_invisibility_off_without_evidence(tiny_run):
    # nothing in this world is occluded, so the gate must never open
    assert tiny_run.state.saw_invisible is False
    for pose in tiny_run.aog.poses():
        assert all(p.invisible_penalty is None for p in pose.parts)


def test_loop_event_log_structure(tiny_run):
    types = [e["type"] for e in tiny_run.log.entries]
    assert types[0] == "run-start"
    assert types[-1] == "run-end"
    assert types.count("select") == 2
    assert types.count("storyline-start") == types.count("storyline-end") == 3
    qids = [e["qid"] for e in tiny_run.log.of_type("question")]
    assert qids == sorted(qids)
    # the log round-trips through its own text form
    lines = tiny_run.log.to_text().splitlines()
    assert [json.loads(line) for line in lines] == tiny_run.log.entries


def test_loop_mine_events_track_structure(tiny_run):
    mines = tiny_run.log.of_type("mine")
    assert mines, "collection storylines must mine"
    for event in mines:
        traj = event["objective"]
        assert all(b >= a - 1e-9 for a, b in zip(traj, traj[1:]))
        assert event["parts"] >= 1


def test_exemplar_refusal_is_cheap_and_remembered(tiny_run):
    state = copy.deepcopy(tiny_run.state)
    refusals_before = state.ledger.category("cat0").exemplar_refusals
    record = run_storyline(
        state, Storyline(kind=KIND_NEW_ARRANGEMENT, category="cat0"), iteration=99
    )
    # the one arrangement is already anchored, so the instructor declines
    assert record.pose_key is None
    assert record.boxes_labeled == 0
    assert record.realized_cost == pytest.approx(state.config.cost.check_object)
    assert state.ledger.category("cat0").exemplar_refusals == refusals_before + 1

    candidates = build_candidates(
        state.ledger, state.poses_by_category(), state.config.cost, state.pose_sizes
    )
    kind4 = [c for c in candidates if c.storyline.kind == KIND_NEW_ARRANGEMENT]
    assert kind4 and all(c.probability == 0.0 and c.ratio == 0.0 for c in kind4)
