"""Learning-curve CSV and plot rendering from a finished run."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless
import matplotlib.pyplot as plt

from .engine import CurvePoint

CSV_COLUMNS = [
    "iteration",
    "kind",
    "target",
    "realized_cost",
    "predicted_cost",
    "cumulative_cost",
    "cumulative_predicted_cost",
    "gain_generative",
    "gain_category",
    "gain_part",
    "app",
    "aer",
    "boxes_cumulative",
    "judgments_cumulative",
    "labor_boxes_only",
    "labor_boxes_plus_judgments",
]

_INT_COLUMNS = {"iteration", "kind", "boxes_cumulative", "judgments_cumulative"}

# a yes/no judgment is priced at a fifth of drawing a box
JUDGMENT_SHARE = 0.2


def curve_rows(curve: list[CurvePoint]) -> list[dict]:
    rows = []
    for point in curve:
        rows.append(
            {
                "iteration": point.iteration,
                "kind": point.kind,
                "target": point.target,
                "realized_cost": point.realized_cost,
                "predicted_cost": point.predicted_cost,
                "cumulative_cost": point.cumulative_cost,
                "cumulative_predicted_cost": point.cumulative_predicted_cost,
                "gain_generative": point.gains[0],
                "gain_category": point.gains[1],
                "gain_part": point.gains[2],
                "app": point.app,
                "aer": point.aer,
                "boxes_cumulative": point.boxes_cumulative,
                "judgments_cumulative": point.judgments_cumulative,
                "labor_boxes_only": float(point.boxes_cumulative),
                "labor_boxes_plus_judgments": point.boxes_cumulative
                + JUDGMENT_SHARE * point.judgments_cumulative,
            }
        )
    return rows


def write_curve_csv(rows: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def read_curve_csv(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open(newline="") as fh:
        for raw in csv.DictReader(fh):
            row: dict = {}
            for key, value in raw.items():
                if key == "target":
                    row[key] = value
                elif key in _INT_COLUMNS:
                    row[key] = int(value)
                else:
                    row[key] = float(value)
            rows.append(row)
    return rows


def write_curve_plots(rows: list[dict], out_dir: str | Path) -> list[Path]:
    """Accuracy against annotation labor, in both labor accountings, plus
    the cost trajectory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, labor_key, title in (
        (axes[0], "labor_boxes_only", "labor: boxes only"),
        (axes[1], "labor_boxes_plus_judgments", "labor: boxes + 0.2 x judgments"),
    ):
        x = [r[labor_key] for r in rows]
        ax.plot(x, [r["app"] for r in rows], marker="o", label="per-part accuracy")
        ax.plot(x, [r["aer"] for r in rows], marker="s", label="explanation rate")
        ax.set_xlabel("annotation labor")
        ax.set_ylabel("held-out accuracy")
        ax.set_ylim(0, 1.05)
        ax.set_title(title)
        ax.legend()
        ax.grid(alpha=0.3)
    fig.tight_layout()
    p = out / "accuracy_vs_labor.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(
        [r["iteration"] for r in rows],
        [r["cumulative_cost"] for r in rows],
        marker="o",
        label="realized cost",
    )
    ax.plot(
        [r["iteration"] for r in rows],
        [r["cumulative_predicted_cost"] for r in rows],
        marker="s",
        label="predicted cost",
    )
    ax.set_xlabel("storyline")
    ax.set_ylabel("cumulative cost")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    p = out / "cost_trajectory.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)
    return written


def write_eval_report(report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "app": report.app,
        "aer": report.aer,
        "per_type": report.per_type,
        "mean_localization_error": report.mean_localization_error,
        "objects": report.objects,
        "parts_evaluated": report.parts_evaluated,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return path
