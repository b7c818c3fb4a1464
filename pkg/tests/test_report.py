import pytest

from aogqa.engine import CurvePoint
from aogqa.metrics import EvalReport
from aogqa.report import (
    CSV_COLUMNS,
    JUDGMENT_SHARE,
    curve_rows,
    read_curve_csv,
    write_curve_csv,
    write_curve_plots,
    write_eval_report,
)


def _point(iteration, boxes, judgments, **kw):
    base = dict(
        iteration=iteration,
        kind=2,
        target="cat0/0",
        realized_cost=12.5,
        predicted_cost=10.0,
        cumulative_cost=12.5 * (iteration + 1),
        cumulative_predicted_cost=10.0 * (iteration + 1),
        gains=(-0.5, 0.1, 0.2),
        app=0.5 + 0.1 * iteration,
        aer=0.4 + 0.1 * iteration,
        boxes_cumulative=boxes,
        judgments_cumulative=judgments,
    )
    base.update(kw)
    return CurvePoint(**base)


@pytest.fixture()
def curve():
    return [_point(0, 4, 10), _point(1, 9, 25), _point(2, 9, 40)]


def test_rows_split_gains_and_price_labor(curve):
    rows = curve_rows(curve)
    assert len(rows) == 3
    first = rows[0]
    assert list(first) == CSV_COLUMNS
    assert (first["gain_generative"], first["gain_category"], first["gain_part"]) == (
        -0.5,
        0.1,
        0.2,
    )
    assert first["labor_boxes_only"] == 4.0
    assert first["labor_boxes_plus_judgments"] == 4 + JUDGMENT_SHARE * 10
    assert rows[2]["labor_boxes_plus_judgments"] == pytest.approx(9 + 0.2 * 40)


def test_csv_round_trip_restores_types(curve, tmp_path):
    rows = curve_rows(curve)
    path = write_curve_csv(rows, tmp_path / "curve.csv")
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    back = read_curve_csv(path)
    assert back == rows
    assert isinstance(back[0]["iteration"], int)
    assert isinstance(back[0]["boxes_cumulative"], int)
    assert isinstance(back[0]["app"], float)
    assert back[1]["target"] == "cat0/0"


def test_plots_are_written(curve, tmp_path):
    rows = curve_rows(curve)
    written = write_curve_plots(rows, tmp_path)
    assert [p.name for p in written] == ["accuracy_vs_labor.png", "cost_trajectory.png"]
    for p in written:
        assert p.stat().st_size > 0


def test_eval_report_serialized_as_json(tmp_path):
    report = EvalReport(
        app=0.75,
        aer=0.8,
        per_type={"cat0/part-a": 0.75},
        mean_localization_error=0.12,
        objects=6,
        parts_evaluated=12,
    )
    path = write_eval_report(report, tmp_path / "eval.json")
    import json

    doc = json.loads(path.read_text())
    assert doc["app"] == 0.75
    assert doc["per_type"] == {"cat0/part-a": 0.75}
    assert set(doc) == {
        "app",
        "aer",
        "per_type",
        "mean_localization_error",
        "objects",
        "parts_evaluated",
    }
