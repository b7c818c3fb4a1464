"""Greedy storyline selection: biggest predicted loss drop per unit cost."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .costs import (
    CostModel,
    GAIN_COMPONENTS,
    KIND_COLLECT,
    KIND_NEW_ARRANGEMENT,
    KIND_PART_REVIEW,
    KIND_RETRIEVAL,
    PoolSizes,
    Storyline,
    predicted_cost,
)
from .ledger import RiskLedger

_COST_FLOOR = 1e-9


def estimate_pose_probability(
    confirmed: dict[str, int], yes_ratios: dict[str, float], pose_key: str
) -> float:
    """Share of believed-genuine samples owned by this pose.

    Each pose's confirmed pool is discounted by its spot-check yes ratio,
    then normalized across all poses. No pools at all means a uniform guess.
    """
    weights = {k: confirmed.get(k, 0) * yes_ratios.get(k, 1.0) for k in confirmed}
    total = sum(weights.values())
    if total <= 0:
        return 1.0 / len(confirmed) if confirmed else 0.0
    return weights.get(pose_key, 0.0) / total


def unexplained_mass(relevance_estimate: float, pool_size: int, confirmed_total: int) -> float:
    """Fraction of the keyword pool's believed-relevant scenes not yet claimed
    by any modeled arrangement; drives the appetite for brand-new poses."""
    expected = relevance_estimate * pool_size
    if expected <= 0:
        return 0.0
    return max(0.0, (expected - confirmed_total) / expected)


def predict_gains(ledger: RiskLedger, kind: int, target: str) -> tuple[float, float, float]:
    """Componentwise mean of history for (kind, target); optimistic before any."""
    history = ledger.history(kind, target)
    if history:
        n = len(history)
        return (
            sum(h[0] for h in history) / n,
            sum(h[1] for h in history) / n,
            sum(h[2] for h in history) / n,
        )
    mask = GAIN_COMPONENTS[kind]
    return (-1.0 * mask[0], -1.0 * mask[1], -1.0 * mask[2])


@dataclass(frozen=True)
class CandidateStoryline:
    storyline: Storyline
    probability: float
    predicted_gains: tuple[float, float, float]
    cost: float

    @property
    def ratio(self) -> float:
        """Expected loss reduction per unit cost (higher is better)."""
        numerator = -self.probability * sum(self.predicted_gains)
        if numerator == 0.0:
            return 0.0
        return numerator / max(self.cost, _COST_FLOOR)


def build_candidates(
    ledger: RiskLedger,
    poses_by_category: dict[str, list[str]],
    model: CostModel,
    sizes_for: Callable[[Storyline], PoolSizes],
) -> list[CandidateStoryline]:
    """Full candidate set: three per-pose kinds plus one new-arrangement
    candidate per category, in stable pose-major order."""
    confirmed = {
        key: ledger.pose(key).confirmed
        for keys in poses_by_category.values()
        for key in keys
    }
    yes_ratios = {key: ledger.pose(key).yes_ratio for key in confirmed}
    out: list[CandidateStoryline] = []
    for category, pose_keys in poses_by_category.items():
        for pose_key in pose_keys:
            p = estimate_pose_probability(confirmed, yes_ratios, pose_key)
            for kind in (KIND_RETRIEVAL, KIND_PART_REVIEW, KIND_COLLECT):
                line = Storyline(kind=kind, category=category, pose_key=pose_key)
                out.append(
                    CandidateStoryline(
                        storyline=line,
                        probability=p,
                        predicted_gains=predict_gains(ledger, kind, pose_key),
                        cost=predicted_cost(model, kind, sizes_for(line)),
                    )
                )
    for category, pose_keys in poses_by_category.items():
        stats = ledger.category(category)
        total_confirmed = sum(ledger.pose(k).confirmed for k in pose_keys)
        if stats.exemplar_refusals:
            p = 0.0  # instructor already said nothing new remains
        else:
            p = unexplained_mass(stats.relevance_estimate, stats.pool_size, total_confirmed)
        line = Storyline(kind=KIND_NEW_ARRANGEMENT, category=category, pose_key=None)
        out.append(
            CandidateStoryline(
                storyline=line,
                probability=p,
                predicted_gains=predict_gains(ledger, KIND_NEW_ARRANGEMENT, category),
                cost=predicted_cost(model, KIND_NEW_ARRANGEMENT, sizes_for(line)),
            )
        )
    return out


def select_next_storyline(candidates: list[CandidateStoryline]) -> CandidateStoryline:
    """Argmax of the gain-per-cost ratio; ties prefer the cheaper candidate,
    then earliest in catalogue order."""
    if not candidates:
        raise ValueError("no candidate storylines")
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.ratio > best.ratio or (cand.ratio == best.ratio and cand.cost < best.cost):
            best = cand
    return best
