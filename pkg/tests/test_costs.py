import pytest

from aogqa.costs import (
    CostCounter,
    CostModel,
    GAIN_COMPONENTS,
    KIND_COLLECT,
    KIND_NEW_ARRANGEMENT,
    KIND_PART_REVIEW,
    KIND_RETRIEVAL,
    KINDS,
    PoolSizes,
    Storyline,
    predicted_cost,
)

MODEL = CostModel()


def test_default_prices():
    assert MODEL.check_part == 1.0
    assert MODEL.check_object == 1.0
    assert MODEL.label_part == 5.0
    assert MODEL.retrieval == 0.01
    assert MODEL.collect == 0.01
    assert MODEL.demonstrate_pose == 50.0
    assert MODEL.sample_checks == 10


def test_retrieval_cost_hand_value():
    sizes = PoolSizes(confirmed=100, pose_options=3, category_pool=0, semantic_parts=0)
    assert predicted_cost(MODEL, KIND_RETRIEVAL, sizes) == 3.0


def test_part_review_cost_hand_value():
    sizes = PoolSizes(confirmed=0, pose_options=1, category_pool=0, semantic_parts=4)
    assert predicted_cost(MODEL, KIND_PART_REVIEW, sizes) == 24.0


def test_new_arrangement_cost_hand_value():
    sizes = PoolSizes(confirmed=0, pose_options=1, category_pool=50, semantic_parts=10)
    # 50 demo + 3 collect rounds at 0.5 + 3 spot-check rounds at 10 + 10 labels at 5
    assert predicted_cost(MODEL, KIND_NEW_ARRANGEMENT, sizes) == 131.5


@pytest.mark.parametrize(
    "kind,sizes,expected",
    [
        (KIND_RETRIEVAL, PoolSizes(10, 2, 0, 0), 0.2),
        (KIND_RETRIEVAL, PoolSizes(0, 5, 0, 0), 0.0),
        (KIND_PART_REVIEW, PoolSizes(0, 1, 0, 1), 6.0),
        (KIND_PART_REVIEW, PoolSizes(0, 1, 0, 7), 42.0),
        (KIND_COLLECT, PoolSizes(20, 2, 100, 3), 1.0 + 10.0 + 3.0 + 15.0 + 0.4),
        (KIND_COLLECT, PoolSizes(0, 1, 50, 2), 0.5 + 10.0 + 2.0 + 10.0),
        (KIND_NEW_ARRANGEMENT, PoolSizes(0, 1, 100, 2), 50.0 + 3.0 + 30.0 + 10.0),
        (KIND_NEW_ARRANGEMENT, PoolSizes(30, 3, 60, 5), 50.0 + 1.8 + 30.0 + 25.0 + 0.9),
    ],
)
def test_predicted_cost_parameterizations(kind, sizes, expected):
    assert predicted_cost(MODEL, kind, sizes) == pytest.approx(expected, abs=1e-12)


def test_predicted_cost_is_linear_in_pool_sizes():
    base = PoolSizes(confirmed=10, pose_options=2, category_pool=40, semantic_parts=3)
    doubled = PoolSizes(confirmed=20, pose_options=2, category_pool=80, semantic_parts=6)
    for kind in KINDS:
        c0 = predicted_cost(MODEL, kind, PoolSizes(0, 2, 0, 0))
        c1 = predicted_cost(MODEL, kind, base)
        c2 = predicted_cost(MODEL, kind, doubled)
        # affine in the sizes: doubling all linear drivers doubles the variable share
        assert c2 - c0 == pytest.approx(2.0 * (c1 - c0), abs=1e-12)


def test_predicted_cost_rejects_unknown_kind():
    with pytest.raises(ValueError):
        predicted_cost(MODEL, 9, PoolSizes(0, 1, 0, 0))


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(label_part=-1.0)
    with pytest.raises(ValueError):
        CostModel(sample_checks=-2)


def test_cost_model_round_trip():
    model = CostModel(check_part=2.0, sample_checks=4)
    assert CostModel.from_dict(model.to_dict()) == model


def test_storyline_validation_and_labels():
    with pytest.raises(ValueError):
        Storyline(kind=7, category="cat0", pose_key="cat0/0")
    with pytest.raises(ValueError):
        Storyline(kind=KIND_RETRIEVAL, category="cat0")  # needs a pose
    line = Storyline(kind=KIND_NEW_ARRANGEMENT, category="cat0")
    assert line.label() == "kind4:cat0"
    assert Storyline(kind=KIND_COLLECT, category="cat0", pose_key="cat0/1").label() == "kind3:cat0/1"


def test_gain_component_masks():
    assert GAIN_COMPONENTS[KIND_RETRIEVAL] == (0, 1, 0)
    assert GAIN_COMPONENTS[KIND_PART_REVIEW] == (0, 1, 1)
    assert GAIN_COMPONENTS[KIND_COLLECT] == (1, 1, 1)
    assert GAIN_COMPONENTS[KIND_NEW_ARRANGEMENT] == (1, 0, 0)


def test_realized_cost_arithmetic():
    counter = CostCounter(part_checks=3, boxes_labeled=2, sample_checks=4,
                          exemplars=1, rescored=120, ranked=50)
    expected = 3 * 1.0 + 2 * 5.0 + 4 * 1.0 + 1 * 50.0 + 120 * 0.01 + 50 * 0.01
    assert counter.realized_cost(MODEL) == pytest.approx(expected, abs=1e-12)
    assert counter.judgments == 7


def test_counter_merge():
    a = CostCounter(part_checks=1, boxes_labeled=2)
    b = CostCounter(part_checks=3, sample_checks=5, ranked=7)
    a.merge(b)
    assert (a.part_checks, a.boxes_labeled, a.sample_checks, a.ranked) == (4, 2, 5, 7)
