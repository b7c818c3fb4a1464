"""Risk bookkeeping: gain records, pool statistics, and the event log."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _plain(value):
    """Recursively coerce numpy scalars and arrays into JSON-ready types."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass
class GainRecord:
    """Outcome of one executed storyline."""

    iteration: int
    kind: int
    category: str
    pose_key: str | None
    predicted_cost: float
    realized_cost: float
    predicted_gains: tuple[float, float, float]
    realized_gains: tuple[float, float, float]
    boxes_labeled: int = 0
    judgments: int = 0
    questions: int = 0

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "kind": self.kind,
            "category": self.category,
            "pose_key": self.pose_key,
            "predicted_cost": self.predicted_cost,
            "realized_cost": self.realized_cost,
            "predicted_gains": list(self.predicted_gains),
            "realized_gains": list(self.realized_gains),
            "boxes_labeled": self.boxes_labeled,
            "judgments": self.judgments,
            "questions": self.questions,
        }


@dataclass
class PoseStats:
    """Running pool statistics for one pose."""

    confirmed: int = 0  # confirmed sample count
    checks_yes: int = 0
    checks_asked: int = 0

    @property
    def yes_ratio(self) -> float:
        # optimistic before any spot checks
        if self.checks_asked == 0:
            return 1.0
        return self.checks_yes / self.checks_asked


@dataclass
class CategoryStats:
    pool_size: int = 0
    relevance_yes: int = 0
    relevance_asked: int = 0
    exemplar_refusals: int = 0  # instructor said no unmodeled arrangement remains

    @property
    def relevance_estimate(self) -> float:
        """Smoothed fraction of the keyword pool believed relevant."""
        return (self.relevance_yes + 1) / (self.relevance_asked + 1)


class RiskLedger:
    """Single-writer record of costs, gains, and loss snapshots."""

    def __init__(self):
        self.records: list[GainRecord] = []
        self.cumulative_cost: float = 0.0
        self.cumulative_predicted_cost: float = 0.0
        self.pose_stats: dict[str, PoseStats] = {}
        self.category_stats: dict[str, CategoryStats] = {}
        self.losses: dict[str, dict[str, float]] = {}
        self.gain_history: dict[tuple[int, str], list[tuple[float, float, float]]] = {}

    def pose(self, pose_key: str) -> PoseStats:
        return self.pose_stats.setdefault(pose_key, PoseStats())

    def category(self, name: str) -> CategoryStats:
        return self.category_stats.setdefault(name, CategoryStats())

    def record(self, rec: GainRecord) -> None:
        if rec.realized_cost < 0:
            raise ValueError("realized cost cannot be negative")
        self.records.append(rec)
        self.cumulative_cost += rec.realized_cost
        self.cumulative_predicted_cost += rec.predicted_cost
        key = (rec.kind, rec.pose_key if rec.pose_key is not None else rec.category)
        self.gain_history.setdefault(key, []).append(rec.realized_gains)

    def history(self, kind: int, target: str) -> list[tuple[float, float, float]]:
        return self.gain_history.get((kind, target), [])

    def set_losses(self, pose_key: str, gen: float, cate: float, part: float) -> None:
        self.losses[pose_key] = {"generative": gen, "category": cate, "part": part}

    def total_loss(self) -> float:
        return sum(sum(v.values()) for v in self.losses.values())

    def snapshot(self) -> dict:
        """Read-only state view, safe to serialize."""
        return {
            "cumulative_cost": self.cumulative_cost,
            "cumulative_predicted_cost": self.cumulative_predicted_cost,
            "records": [r.to_dict() for r in self.records],
            "pose_stats": {
                key: {
                    "confirmed": s.confirmed,
                    "checks_yes": s.checks_yes,
                    "checks_asked": s.checks_asked,
                    "yes_ratio": s.yes_ratio,
                }
                for key, s in sorted(self.pose_stats.items())
            },
            "category_stats": {
                name: {
                    "pool_size": s.pool_size,
                    "relevance_yes": s.relevance_yes,
                    "relevance_asked": s.relevance_asked,
                    "relevance_estimate": s.relevance_estimate,
                    "exemplar_refusals": s.exemplar_refusals,
                }
                for name, s in sorted(self.category_stats.items())
            },
            "losses": {k: dict(v) for k, v in sorted(self.losses.items())},
        }


class EventLog:
    """Append-only line-delimited records with a logical clock.

    Wall time would break the byte-for-byte reproducibility contract, so
    each record carries a sequence number instead.
    """

    def __init__(self, path: str | Path | None = None):
        self.entries: list[dict] = []
        self._path = Path(path) if path is not None else None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._path.write_text("")

    def append(self, event_type: str, **payload) -> dict:
        entry = {"t": len(self.entries), "type": event_type}
        entry.update(_plain(payload))
        line = json.dumps(entry, sort_keys=True, separators=(",", ":"))
        self.entries.append(entry)
        if self._path is not None:
            with self._path.open("a") as fh:
                fh.write(line + "\n")
        return entry

    def to_text(self) -> str:
        return "".join(
            json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.entries
        )

    def of_type(self, event_type: str) -> list[dict]:
        return [e for e in self.entries if e["type"] == event_type]
