"""Few-shot demonstration selection for seen acronyms.

Pipeline: BM25 candidate pool (same acronym) -> diversity deduplication of
near-identical contexts -> round-robin sampling balanced over gold sense
classes -> capped set. Dedup runs first so duplicates never consume a
class slot during balancing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bm25 import Bm25Index
from .dataset import LabeledExample, TestInstance
from .textsim import similarity_at_least, tokenize

# Sense class of an example: the sorted tuple of its gold option strings.
# Classes compare by string so they align across examples whose option
# lists are ordered differently. Empty gold forms its own "none" class.
SenseClass = tuple[str, ...]

NONE_CLASS: SenseClass = ()


def sense_class(example: LabeledExample) -> SenseClass:
    return tuple(sorted(set(example.gold_options())))


def format_sense_class(cls: SenseClass) -> str:
    return " | ".join(cls) if cls else "none"


@dataclass(frozen=True)
class SelectionConfig:
    n_fs: int = 6
    dedup_threshold: float = 0.9
    pool_size: int = 50

    def __post_init__(self):
        if self.n_fs < 0:
            raise ValueError("n_fs must be >= 0")
        if not 0.0 <= self.dedup_threshold <= 1.0:
            raise ValueError("dedup_threshold must be in [0, 1]")
        if self.pool_size < self.n_fs:
            raise ValueError("pool_size must be >= n_fs")


@dataclass(frozen=True)
class FewShotProvenance:
    bm25_rank: int
    sense: SenseClass


@dataclass(frozen=True)
class FewShotSet:
    examples: tuple[LabeledExample, ...]
    provenance: tuple[FewShotProvenance, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.examples)

    def __bool__(self) -> bool:
        return bool(self.examples)

    def ids(self) -> list[str]:
        return [ex.id for ex in self.examples]


EMPTY_FEWSHOT = FewShotSet(examples=())


def deduplicate(
    examples: list[LabeledExample], threshold: float
) -> list[LabeledExample]:
    """Greedy scan: drop any example whose context is >= threshold similar
    to an already-kept one. Keeps relative order."""
    kept: list[LabeledExample] = []
    for candidate in examples:
        if any(
            similarity_at_least(candidate.context, k.context, threshold)
            for k in kept
        ):
            continue
        kept.append(candidate)
    return kept


def balanced_sample(
    pool: list[LabeledExample], config: SelectionConfig
) -> list[LabeledExample]:
    """Round-robin over sense classes (ordered by first appearance in the
    rank-ordered pool) until n_fs examples are picked or the pool runs out.
    Within a class, higher-ranked examples go first."""
    queues: dict[SenseClass, list[LabeledExample]] = {}
    for ex in pool:
        queues.setdefault(sense_class(ex), []).append(ex)

    picked: list[LabeledExample] = []
    rotation = list(queues)
    cursor = {cls: 0 for cls in rotation}
    while rotation and len(picked) < config.n_fs:
        next_round = []
        for cls in rotation:
            if len(picked) >= config.n_fs:
                break
            picked.append(queues[cls][cursor[cls]])
            cursor[cls] += 1
            if cursor[cls] < len(queues[cls]):
                next_round.append(cls)
        rotation = next_round
    return picked


def select_fewshot(
    instance: TestInstance,
    index: Bm25Index,
    train: list[LabeledExample],
    config: SelectionConfig | None = None,
) -> FewShotSet:
    """Curate the demonstration set for a seen acronym.

    Raises ValueError if the acronym never occurs in training (the router
    must not send unseen acronyms here).
    """
    config = config or SelectionConfig()
    ranked = index.top_k(
        tokenize(instance.context), config.pool_size,
        acronym_filter=instance.acronym,
    )
    if not ranked:
        raise ValueError(
            f"acronym {instance.acronym!r} has no training occurrences; "
            "few-shot selection requires a seen acronym"
        )
    # doc ids are positions in the training list the index was built from;
    # ranks key on object identity so value-equal records keep their own slot
    pool = [train[doc_id] for doc_id, _score in ranked]
    rank_of = {id(ex): rank for rank, ex in enumerate(pool)}

    pool = deduplicate(pool, config.dedup_threshold)
    chosen = balanced_sample(pool, config)
    return FewShotSet(
        examples=tuple(chosen),
        provenance=tuple(
            FewShotProvenance(bm25_rank=rank_of[id(ex)], sense=sense_class(ex))
            for ex in chosen
        ),
    )
