"""Acronym disambiguation pipeline.

Routes each acronym occurrence to a prompt template based on training
visibility and candidate-option overlap, grounds prompts with BM25-selected
demonstrations and knowledge-base definitions, queries an ensemble of
language models, and aggregates boolean verdicts with a cascaded vote.
"""

from .bm25 import Bm25Index, Bm25Params, build_index
from .dataset import (
    AcronymPartition,
    DatasetError,
    DatasetStats,
    LabeledExample,
    TestInstance,
    corpus_stats,
    load_test,
    load_training,
    partition_acronyms,
)
from .ensemble import (
    EnsembleConfig,
    PredictionSet,
    ResolvePath,
    VoteOutcome,
    majority_vote,
    resolve,
    verdict_to_prediction,
)
from .gateway import (
    DecodingProfile,
    ModelVerdict,
    ProviderSpec,
    ResponseCache,
    cached_complete,
    complete,
    mock_provider,
    parse_verdicts,
)
from .knowledge import KnowledgeBase, build_kb, derive_from_training
from .prompts import (
    PromptBundle,
    RouteReason,
    RoutingDecision,
    render_template_a,
    render_template_b,
    route,
)
from .scoring import ScoreReport, competence, score
from .selection import (
    FewShotSet,
    SelectionConfig,
    balanced_sample,
    deduplicate,
    select_fewshot,
    sense_class,
)
from .stemmer import stem
from .textsim import (
    max_pairwise_option_similarity,
    normalized_text_similarity,
    stem_jaccard,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "AcronymPartition", "Bm25Index", "Bm25Params", "DatasetError",
    "DatasetStats", "DecodingProfile", "EnsembleConfig", "FewShotSet",
    "KnowledgeBase", "LabeledExample", "ModelVerdict", "PredictionSet",
    "PromptBundle", "ProviderSpec", "ResolvePath", "ResponseCache",
    "RouteReason", "RoutingDecision", "ScoreReport", "SelectionConfig",
    "TestInstance", "VoteOutcome", "balanced_sample", "build_index",
    "build_kb", "cached_complete", "competence", "complete", "corpus_stats",
    "deduplicate", "derive_from_training", "load_test", "load_training",
    "majority_vote", "max_pairwise_option_similarity", "mock_provider",
    "normalized_text_similarity", "parse_verdicts", "partition_acronyms",
    "render_template_a", "render_template_b", "resolve", "route", "score",
    "select_fewshot", "sense_class", "stem", "stem_jaccard", "tokenize",
    "verdict_to_prediction",
]
