"""Scoring, provider competence ranking, and ablation comparisons.

Micro F1 pools option-level boolean decisions across instances; macro F1
averages per-instance set F1 with the convention that predicting nothing
for an empty gold set is a perfect instance (f1 = 1.0). Micro is the
headline number; both are always reported.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Mapping

from .dataset import LabeledExample, TestInstance
from .ensemble import PredictionSet


@dataclass(frozen=True)
class InstanceScore:
    id: str
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ScoreReport:
    micro_f1: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    per_instance: tuple[InstanceScore, ...]
    true_positives: int
    false_positives: int
    false_negatives: int

    def as_dict(self) -> dict:
        return {
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "instances": len(self.per_instance),
        }


def _set_prf(pred: frozenset[int], gold: frozenset[int]) -> tuple[float, float, float]:
    if not pred and not gold:
        return 1.0, 1.0, 1.0
    tp = len(pred & gold)
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(gold) if gold else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def score(
    predictions: Mapping[str, PredictionSet],
    gold: Mapping[str, frozenset[int] | set[int]],
) -> ScoreReport:
    """Score predictions against gold label sets, keyed by instance id.

    Instances missing from predictions count as empty predictions; a
    prediction for an id absent from gold is an error.
    """
    unknown = [i for i in predictions if i not in gold]
    if unknown:
        raise ValueError(f"predictions for unknown id(s): {', '.join(sorted(unknown))}")

    tp = fp = fn = 0
    per_instance = []
    for inst_id in gold:
        g = frozenset(gold[inst_id])
        p = frozenset(predictions.get(inst_id, frozenset()))
        tp += len(p & g)
        fp += len(p - g)
        fn += len(g - p)
        precision, recall, f1 = _set_prf(p, g)
        per_instance.append(InstanceScore(inst_id, precision, recall, f1))

    micro_p = tp / (tp + fp) if tp + fp else 1.0
    micro_r = tp / (tp + fn) if tp + fn else 1.0
    micro_f1 = (
        2 * micro_p * micro_r / (micro_p + micro_r)
        if micro_p + micro_r else 0.0
    )
    macro_f1 = (
        sum(s.f1 for s in per_instance) / len(per_instance)
        if per_instance else 0.0
    )
    return ScoreReport(
        micro_f1=micro_f1,
        macro_f1=macro_f1,
        micro_precision=micro_p,
        micro_recall=micro_r,
        per_instance=tuple(per_instance),
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
    )


@dataclass(frozen=True)
class CompetenceTable:
    accuracy: dict[str, float]  # exact-set-match rate per provider
    micro_f1: dict[str, float]
    disagreement: dict[tuple[str, str], float]
    best: str


def competence(
    per_provider: Mapping[str, Mapping[str, PredictionSet]],
    gold: Mapping[str, frozenset[int] | set[int]],
) -> CompetenceTable:
    """Rank providers on a validation split.

    best = argmax exact-set-match accuracy, ties broken by micro F1 then
    name. Pairwise disagreement (share of instances where two providers
    emit different sets) is the error-diversity proxy for subset selection.
    """
    providers = sorted(per_provider)
    if not providers:
        raise ValueError("no providers to rank")
    ids = sorted(gold)
    for name in providers:
        missing = [i for i in ids if i not in per_provider[name]]
        if missing:
            raise ValueError(
                f"provider {name!r} lacks predictions for: "
                f"{', '.join(missing[:5])}"
            )

    accuracy = {}
    micro = {}
    for name in providers:
        preds = per_provider[name]
        exact = sum(
            1 for i in ids if frozenset(preds[i]) == frozenset(gold[i])
        )
        accuracy[name] = exact / len(ids) if ids else 0.0
        micro[name] = score(
            {i: frozenset(preds[i]) for i in ids}, gold
        ).micro_f1

    disagreement: dict[tuple[str, str], float] = {}
    for a in providers:
        for b in providers:
            if ids:
                diff = sum(
                    1 for i in ids
                    if frozenset(per_provider[a][i]) != frozenset(per_provider[b][i])
                )
                disagreement[(a, b)] = diff / len(ids)
            else:
                disagreement[(a, b)] = 0.0

    best = min(providers, key=lambda n: (-accuracy[n], -micro[n], n))
    return CompetenceTable(
        accuracy=accuracy, micro_f1=micro, disagreement=disagreement, best=best,
    )


def suggest_ensemble(
    table: CompetenceTable, subset_size: int = 2
) -> tuple[tuple[str, ...], str, str]:
    """Heuristic (subset, tie_breaker, best) from a competence table.

    Subset = the top-accuracy providers; tie-breaker = the remaining
    provider most likely to disagree with the subset (complementary
    reasoning proxy). Requires at least subset_size + 1 providers.
    """
    ranked = sorted(
        table.accuracy,
        key=lambda n: (-table.accuracy[n], -table.micro_f1[n], n),
    )
    if len(ranked) < subset_size + 1:
        raise ValueError(
            f"need at least {subset_size + 1} providers, have {len(ranked)}"
        )
    subset = tuple(ranked[:subset_size])
    rest = ranked[subset_size:]
    tie_breaker = max(
        rest,
        key=lambda n: (
            sum(table.disagreement[(n, s)] for s in subset),
            table.accuracy[n],
        ),
    )
    return subset, tie_breaker, ranked[0]


def split_train_validation(
    examples: list[LabeledExample], ratio: float = 0.8, seed: int = 13,
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Seeded split, stratified by acronym where a group is large enough."""
    rng = random.Random(seed)
    groups: dict[str, list[LabeledExample]] = {}
    for ex in examples:
        groups.setdefault(ex.acronym, []).append(ex)
    train: list[LabeledExample] = []
    validation: list[LabeledExample] = []
    for acronym in sorted(groups):
        members = list(groups[acronym])
        rng.shuffle(members)
        n_train = max(1, round(len(members) * ratio)) if len(members) > 1 else 1
        train.extend(members[:n_train])
        validation.extend(members[n_train:])
    return train, validation


def ablation_run(
    variants: list[tuple[str, Callable[[list[TestInstance]], dict[str, PredictionSet]]]],
    instances: list[TestInstance],
    gold: Mapping[str, frozenset[int] | set[int]],
) -> list[tuple[str, ScoreReport]]:
    """Score each named pipeline variant on the same instances.

    A variant failure is attributed to its row and re-raised with the
    variant name attached.
    """
    rows = []
    for name, predict in variants:
        try:
            predictions = predict(instances)
        except Exception as e:
            raise RuntimeError(f"ablation variant {name!r} failed: {e}") from e
        rows.append((name, score(predictions, gold)))
    return rows
