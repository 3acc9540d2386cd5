"""Task records, dataset I/O, seen/unseen partitioning, corpus statistics.

Dataset files are UTF-8 JSON-lines: one object per record with keys
"id" (str), "acronym" (str), "context" (str), "options" (list of str) and,
for labeled data, "gold" (list of option indices). Acronyms are canonical
after whitespace trimming; comparison is case-sensitive so distinct keys
like "Ep" and "EP" are never merged.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    """Malformed dataset file or record."""


@dataclass(frozen=True)
class LabeledExample:
    """One annotated training record: acronym in context, candidate
    expansions, and the (possibly empty) set of correct option indices."""

    id: str
    acronym: str
    context: str
    options: tuple[str, ...]
    gold: frozenset[int]

    def gold_options(self) -> tuple[str, ...]:
        return tuple(self.options[i] for i in sorted(self.gold))


@dataclass(frozen=True)
class TestInstance:
    """One unlabeled record to disambiguate."""

    __test__ = False  # keep pytest from collecting this as a test class

    id: str
    acronym: str
    context: str
    options: tuple[str, ...]


@dataclass(frozen=True)
class AcronymPartition:
    """Test acronyms split by whether they occur in the training set."""

    seen: frozenset[str]
    unseen: frozenset[str]


@dataclass(frozen=True)
class DatasetStats:
    example_count: int
    option_count_histogram: dict[int, int]
    zero_correct_count: int
    multi_correct_count: int
    unique_acronym_count: int


def canonical_acronym(acronym: str) -> str:
    return acronym.strip()


def _read_records(path: str | Path) -> list[dict]:
    p = Path(path)
    if not p.is_file():
        raise DatasetError(f"dataset file not found: {p}")
    records = []
    with open(p, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"record {lineno}: invalid JSON ({e})") from e
            if not isinstance(obj, dict):
                raise DatasetError(f"record {lineno}: expected a JSON object")
            obj["_lineno"] = lineno
            records.append(obj)
    if not records:
        raise DatasetError(f"no records in {p}")
    return records


def _field(rec: dict, name: str, kind: type):
    lineno = rec["_lineno"]
    if name not in rec:
        raise DatasetError(f"record {lineno}: missing field '{name}'")
    value = rec[name]
    if not isinstance(value, kind):
        raise DatasetError(
            f"record {lineno}: field '{name}' must be {kind.__name__}"
        )
    return value


def _parse_options(rec: dict) -> tuple[str, ...]:
    raw = _field(rec, "options", list)
    lineno = rec["_lineno"]
    if not raw:
        raise DatasetError(f"record {lineno}: 'options' must be non-empty")
    for opt in raw:
        if not isinstance(opt, str) or not opt:
            raise DatasetError(
                f"record {lineno}: options must be non-empty strings"
            )
    return tuple(raw)


def _parse_gold(rec: dict, options: tuple[str, ...]) -> frozenset[int]:
    lineno = rec["_lineno"]
    raw = rec.get("gold", [])
    if not isinstance(raw, list):
        raise DatasetError(f"record {lineno}: field 'gold' must be a list")
    indices = set()
    for g in raw:
        if isinstance(g, bool) or not isinstance(g, int):
            raise DatasetError(
                f"record {lineno}: gold entries must be integer indices "
                "(use convert_gold_strings for string-valued gold)"
            )
        if not 0 <= g < len(options):
            raise DatasetError(
                f"record {lineno}: gold index {g} out of range "
                f"for {len(options)} options"
            )
        indices.add(g)
    if len(indices) > 2:
        logger.warning(
            "record %s (id=%s): %d gold entries (expected 0, 1 or 2)",
            lineno, rec.get("id"), len(indices),
        )
    return frozenset(indices)


def load_training(path: str | Path) -> list[LabeledExample]:
    """Load labeled examples from a JSON-lines file."""
    examples = []
    for rec in _read_records(path):
        options = _parse_options(rec)
        examples.append(LabeledExample(
            id=_field(rec, "id", str),
            acronym=canonical_acronym(_field(rec, "acronym", str)),
            context=_field(rec, "context", str),
            options=options,
            gold=_parse_gold(rec, options),
        ))
    return examples


def load_test(path: str | Path) -> list[TestInstance]:
    """Load unlabeled instances; ids must be unique within the file."""
    instances = []
    seen_ids = set()
    for rec in _read_records(path):
        rec_id = _field(rec, "id", str)
        if rec_id in seen_ids:
            raise DatasetError(f"record {rec['_lineno']}: duplicate id '{rec_id}'")
        seen_ids.add(rec_id)
        instances.append(TestInstance(
            id=rec_id,
            acronym=canonical_acronym(_field(rec, "acronym", str)),
            context=_field(rec, "context", str),
            options=_parse_options(rec),
        ))
    return instances


def save_examples(
    examples: list[LabeledExample] | list[TestInstance], path: str | Path
) -> None:
    """Write records back out in the load format (round-trip safe)."""
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            rec = {
                "id": ex.id,
                "acronym": ex.acronym,
                "context": ex.context,
                "options": list(ex.options),
            }
            if isinstance(ex, LabeledExample):
                rec["gold"] = sorted(ex.gold)
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def convert_gold_strings(in_path: str | Path, out_path: str | Path) -> int:
    """Rewrite a file whose gold entries are option strings into the
    index-based schema. Returns the record count."""
    count = 0
    with open(in_path, encoding="utf-8") as fin, \
            open(out_path, "w", encoding="utf-8") as fout:
        for lineno, line in enumerate(fin, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            options = rec.get("options", [])
            gold = rec.get("gold", [])
            indices = []
            for g in gold:
                if isinstance(g, int):
                    indices.append(g)
                    continue
                try:
                    indices.append(options.index(g))
                except ValueError:
                    raise DatasetError(
                        f"record {lineno}: gold string {g!r} not in options"
                    ) from None
            rec["gold"] = sorted(set(indices))
            fout.write(json.dumps(rec, ensure_ascii=False) + "\n")
            count += 1
    return count


def partition_acronyms(
    train: list[LabeledExample], test: list[TestInstance]
) -> AcronymPartition:
    """Split distinct test acronyms into seen-in-training vs unseen."""
    train_acronyms = {ex.acronym for ex in train}
    test_acronyms = {inst.acronym for inst in test}
    seen = test_acronyms & train_acronyms
    return AcronymPartition(
        seen=frozenset(seen),
        unseen=frozenset(test_acronyms - seen),
    )


def corpus_stats(examples: list[LabeledExample]) -> DatasetStats:
    histogram = Counter(len(ex.options) for ex in examples)
    return DatasetStats(
        example_count=len(examples),
        option_count_histogram=dict(sorted(histogram.items())),
        zero_correct_count=sum(1 for ex in examples if not ex.gold),
        multi_correct_count=sum(1 for ex in examples if len(ex.gold) >= 2),
        unique_acronym_count=len({ex.acronym for ex in examples}),
    )
