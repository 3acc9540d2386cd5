"""Cascaded ensemble decision over per-model prediction sets.

Votes are over whole prediction sets (set equality), not per-option
booleans. Cascade: majority vote within the configured subset; on an exact
two-way top tie, a designated tie-breaker model is consulted lazily and the
vote recomputed over the extended pool; if no set reaches the required
support (or the extended vote still ties), the answer falls back to the
best-performing single model.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .gateway import ModelVerdict
from .prompts import option_labels

PredictionSet = frozenset[int]

EMPTY_PREDICTION: PredictionSet = frozenset()


class VoteKind(str, Enum):
    WINNER = "winner"
    TIE = "tie"


class ResolvePath(str, Enum):
    STANDARD = "standard"
    TIE_BROKEN = "tie_broken"
    FALLBACK = "fallback"


@dataclass(frozen=True)
class EnsembleConfig:
    """subset: voting pool; tie_breaker: consulted only on a two-way tie
    (must not sit in the subset); best: fallback model; min_winning_fraction:
    share of the subset the winner must exceed — the default 0.5 with a
    strict comparison means strict majority."""

    subset: tuple[str, ...]
    tie_breaker: str
    best: str
    min_winning_fraction: float = 0.5

    def __post_init__(self):
        if not self.subset:
            raise ValueError("ensemble subset must be non-empty")
        if len(set(self.subset)) != len(self.subset):
            raise ValueError("ensemble subset has duplicate provider names")
        if self.tie_breaker in self.subset:
            raise ValueError("tie_breaker must not be part of the subset")
        if self.best not in self.subset and self.best != self.tie_breaker:
            raise ValueError("best must be in the subset or the tie_breaker")


@dataclass(frozen=True)
class VoteOutcome:
    kind: VoteKind
    winner: PredictionSet | None
    support: dict[PredictionSet, int]

    def top_groups(self) -> list[PredictionSet]:
        top = max(self.support.values())
        return [p for p, c in self.support.items() if c == top]


def verdict_to_prediction(
    verdict: ModelVerdict, options: tuple[str, ...] | list[str]
) -> PredictionSet:
    """Indices of options whose label the model marked true."""
    labels = option_labels(len(options))
    if set(verdict.verdicts.keys()) != set(labels):
        raise ValueError(
            f"verdict labels {sorted(verdict.verdicts)} do not align with "
            f"{len(options)} options"
        )
    return frozenset(
        i for i, lab in enumerate(labels) if verdict.verdicts[lab]
    )


def majority_vote(predictions: list[PredictionSet]) -> VoteOutcome:
    """Group identical sets and find the strict-max support group."""
    if not predictions:
        raise ValueError("majority_vote needs at least one prediction")
    support = Counter(predictions)
    top = max(support.values())
    leaders = [p for p, c in support.items() if c == top]
    if len(leaders) == 1:
        return VoteOutcome(
            kind=VoteKind.WINNER, winner=leaders[0], support=dict(support),
        )
    return VoteOutcome(kind=VoteKind.TIE, winner=None, support=dict(support))


def resolve(
    predictions: dict[str, PredictionSet],
    config: EnsembleConfig,
    tie_breaker_prediction: Callable[[], PredictionSet],
) -> tuple[PredictionSet, ResolvePath]:
    """Run the decision cascade for one instance.

    tie_breaker_prediction is a thunk so the extra model is only queried
    when a two-way tie (or a fallback to it) actually requires it.
    """
    missing = [m for m in config.subset if m not in predictions]
    if missing:
        raise ValueError(f"missing prediction(s) for: {', '.join(missing)}")

    memo: list[PredictionSet] = []

    def extra_model() -> PredictionSet:
        if not memo:
            memo.append(tie_breaker_prediction())
        return memo[0]

    subset_preds = [predictions[m] for m in config.subset]
    outcome = majority_vote(subset_preds)

    if outcome.kind is VoteKind.WINNER:
        needed = config.min_winning_fraction * len(config.subset)
        if outcome.support[outcome.winner] > needed:
            return outcome.winner, ResolvePath.STANDARD
    elif len(outcome.top_groups()) == 2:
        revote = majority_vote(subset_preds + [extra_model()])
        if revote.kind is VoteKind.WINNER:
            return revote.winner, ResolvePath.TIE_BROKEN

    if config.best == config.tie_breaker:
        return extra_model(), ResolvePath.FALLBACK
    return predictions[config.best], ResolvePath.FALLBACK
