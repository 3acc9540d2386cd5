"""Tokenization and surface-similarity measures.

Used by the prompt router (stem-set Jaccard over candidate options) and by
the few-shot deduplicator (normalized edit-distance similarity).
"""

from __future__ import annotations

import re

from .stemmer import stem

# Runs of Unicode letters/digits; underscores and hyphens split tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split on non-alphanumeric boundaries and lowercase. Diacritics kept."""
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


def stem_set(text: str) -> frozenset[str]:
    return frozenset(stem(tok) for tok in tokenize(text))


def stem_jaccard(a: str, b: str) -> float:
    """Jaccard index of the stem sets of two strings, in [0, 1].

    Two empty stem sets score 0.0: a vacuous option is never considered
    similar to anything, so degenerate options cannot force strict routing.
    """
    sa, sb = stem_set(a), stem_set(b)
    if not sa and not sb:
        return 0.0
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return len(sa & sb) / union


def max_pairwise_option_similarity(options: list[str]) -> float:
    """Maximum stem_jaccard over all unordered option pairs; 0.0 if < 2."""
    best = 0.0
    for i in range(len(options)):
        si = stem_set(options[i])
        for j in range(i + 1, len(options)):
            sj = stem_set(options[j])
            if not si and not sj:
                continue
            union = len(si | sj)
            if union:
                best = max(best, len(si & sj) / union)
    return best


def _canonical(text: str) -> str:
    return " ".join(text.lower().split())


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_text_similarity(a: str, b: str) -> float:
    """1 - edit_distance / max_length over lowercased, space-collapsed text.

    Returns 1.0 for two empty strings; equals 1.0 iff canonical forms match.
    """
    ca, cb = _canonical(a), _canonical(b)
    longest = max(len(ca), len(cb))
    if longest == 0:
        return 1.0
    return 1.0 - _levenshtein(ca, cb) / longest


def _levenshtein_within(a: str, b: str, k: int) -> int | None:
    """Exact edit distance when it is <= k, else None (banded DP)."""
    if len(a) < len(b):
        a, b = b, a
    if len(a) - len(b) > k:
        return None
    big = k + 1
    prev = [j if j <= k else big for j in range(len(b) + 1)]
    for i in range(1, len(a) + 1):
        lo = max(1, i - k)
        hi = min(len(b), i + k)
        cur = [big] * (len(b) + 1)
        if lo == 1:
            cur[0] = i if i <= k else big
        ca = a[i - 1]
        for j in range(lo, hi + 1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != b[j - 1]),
            )
        if min(cur[lo - 1:hi + 1]) > k:
            return None
        prev = cur
    return prev[len(b)] if prev[len(b)] <= k else None


def similarity_at_least(a: str, b: str, threshold: float) -> bool:
    """Exactly normalized_text_similarity(a, b) >= threshold, but with a
    banded edit distance that rejects dissimilar pairs early. The final
    comparison reuses the same float arithmetic, so the two never disagree.
    """
    ca, cb = _canonical(a), _canonical(b)
    longest = max(len(ca), len(cb))
    if longest == 0:
        return 1.0 >= threshold
    if ca == cb:
        return 1.0 >= threshold
    band = int((1.0 - threshold) * longest) + 1
    d = _levenshtein_within(ca, cb, band)
    if d is None:
        return False
    return 1.0 - d / longest >= threshold
