"""BM25 inverted index over training contexts.

Retrieval backbone for few-shot candidate pools: one document per training
example, queried with the tokenized test context, optionally restricted to
occurrences of the target acronym.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .dataset import LabeledExample
from .textsim import tokenize


@dataclass(frozen=True)
class Bm25Params:
    """k1 saturates term frequency; b in [0,1] scales length normalization."""

    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


class Bm25Index:
    """Immutable inverted index; safe for concurrent queries after build."""

    def __init__(
        self,
        postings: dict[str, list[tuple[int, int]]],
        doc_lengths: list[int],
        doc_meta: list[tuple[str, str]],
        params: Bm25Params,
    ):
        self._postings = postings
        self._doc_lengths = doc_lengths
        self._doc_meta = doc_meta
        self.params = params
        self.doc_count = len(doc_lengths)
        self.avg_doc_length = (
            sum(doc_lengths) / len(doc_lengths) if doc_lengths else 0.0
        )
        # doc id -> {term: tf} for O(|q|) scoring of a single document
        self._doc_tfs: list[dict[str, int]] = [dict() for _ in doc_lengths]
        for term, plist in postings.items():
            for doc_id, tf in plist:
                self._doc_tfs[doc_id][term] = tf

    def doc_length(self, doc_id: int) -> int:
        return self._doc_lengths[doc_id]

    def doc_acronym(self, doc_id: int) -> str:
        return self._doc_meta[doc_id][0]

    def doc_example_id(self, doc_id: int) -> str:
        return self._doc_meta[doc_id][1]

    def _idf(self, term: str) -> float:
        df = len(self._postings.get(term, ()))
        return math.log((self.doc_count - df + 0.5) / (df + 0.5) + 1.0)

    def score(self, query: list[str], doc_id: int) -> float:
        """BM25 score of one document against a token multiset.

        sum over query tokens of idf(t) * tf*(k1+1) / (tf + k1*(1-b+b*len/avglen)),
        with the +1-inside-log idf so scores stay non-negative.
        """
        if not 0 <= doc_id < self.doc_count:
            raise KeyError(f"unknown document id {doc_id}")
        tfs = self._doc_tfs[doc_id]
        k1, b = self.params.k1, self.params.b
        norm_len = (
            self._doc_lengths[doc_id] / self.avg_doc_length
            if self.avg_doc_length > 0 else 0.0
        )
        total = 0.0
        for term in query:
            tf = tfs.get(term, 0)
            if tf == 0:
                continue
            total += self._idf(term) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * norm_len))
        return total

    def top_k(
        self,
        query: list[str],
        k: int,
        acronym_filter: str | None = None,
    ) -> list[tuple[int, float]]:
        """Best-scoring documents, ties broken by ascending doc id.

        With a filter, only documents whose source example carries that
        acronym participate; zero-score documents are kept so a sparse
        query still surfaces every occurrence.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if acronym_filter is None:
            candidates = range(self.doc_count)
        else:
            candidates = [
                d for d in range(self.doc_count)
                if self._doc_meta[d][0] == acronym_filter
            ]
        scored = [(d, self.score(query, d)) for d in candidates]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:k]

    def dump(self) -> str:
        """Debug JSON view of the index (not a stability contract)."""
        return json.dumps({
            "params": {"k1": self.params.k1, "b": self.params.b},
            "doc_count": self.doc_count,
            "avg_doc_length": self.avg_doc_length,
            "doc_lengths": self._doc_lengths,
            "doc_meta": self._doc_meta,
            "postings": {t: p for t, p in sorted(self._postings.items())},
        }, ensure_ascii=False, indent=2)


def build_index(
    examples: list[LabeledExample], params: Bm25Params | None = None
) -> Bm25Index:
    """Index one document per training example (tokenized context)."""
    if not examples:
        raise ValueError("cannot build a BM25 index over an empty corpus")
    params = params or Bm25Params()
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths = []
    doc_meta = []
    for doc_id, ex in enumerate(examples):
        tokens = tokenize(ex.context)
        doc_lengths.append(len(tokens))
        doc_meta.append((ex.acronym, ex.id))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((doc_id, tf))
    return Bm25Index(postings, doc_lengths, doc_meta, params)
