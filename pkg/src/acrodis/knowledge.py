"""Acronym knowledge base: validated expansions injected into prompts.

Sources are JSON files mapping acronym -> list of expansion strings, merged
in CLI order with first-occurrence-wins deduplication. A training-derived
source can be generated from gold expansions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dataset import LabeledExample, canonical_acronym

SOURCE_GLOSSARY = "glossary"
SOURCE_DOCUMENTATION = "documentation"
SOURCE_TRAINING = "training-derived"


@dataclass(frozen=True)
class KbDefinition:
    text: str
    source: str


class KnowledgeBase:
    """Immutable after build; lookups are total and never raise."""

    def __init__(self, entries: dict[str, list[KbDefinition]]):
        self._entries = entries

    def lookup(self, acronym: str) -> list[str]:
        """Expansion strings for an acronym; [] when unknown."""
        return [d.text for d in self._entries.get(acronym, [])]

    def lookup_definitions(self, acronym: str) -> list[KbDefinition]:
        return list(self._entries.get(acronym, []))

    def acronyms(self) -> list[str]:
        return sorted(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


def _dedup_key(definition: str) -> str:
    return " ".join(definition.lower().split())


def build_kb(sources: list[tuple[str, str | Path]]) -> KnowledgeBase:
    """Merge (source_tag, path) JSON files; earlier sources win duplicates."""
    contents = []
    for tag, path in sources:
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ValueError(f"malformed KB source {path}: {e}") from e
        if not isinstance(data, dict):
            raise ValueError(f"KB source {path} must be a JSON object")
        contents.append((tag, data, str(path)))
    return merge_kb_contents(contents)


def merge_kb_contents(
    sources: list[tuple[str, dict, str]]
) -> KnowledgeBase:
    """Merge (source_tag, mapping, origin_label) triples into one KB."""
    entries: dict[str, list[KbDefinition]] = {}
    seen: dict[str, set[str]] = {}
    for tag, data, origin in sources:
        for acronym, definitions in data.items():
            acronym = canonical_acronym(acronym)
            if not acronym:
                raise ValueError(f"KB source {origin}: empty acronym key")
            if not isinstance(definitions, list):
                raise ValueError(
                    f"KB source {origin}: entry {acronym!r} must be a list"
                )
            bucket = entries.setdefault(acronym, [])
            keys = seen.setdefault(acronym, set())
            for definition in definitions:
                if not isinstance(definition, str):
                    raise ValueError(
                        f"KB source {origin}: {acronym!r} has a non-string entry"
                    )
                key = _dedup_key(definition)
                if not key or key in keys:
                    continue
                keys.add(key)
                bucket.append(KbDefinition(text=definition, source=tag))
    return KnowledgeBase(entries)


def derive_from_training(examples: list[LabeledExample]) -> dict[str, list[str]]:
    """Gold expansions per acronym, in first-seen order (KB source content)."""
    derived: dict[str, list[str]] = {}
    seen: dict[str, set[str]] = {}
    for ex in examples:
        bucket = derived.setdefault(ex.acronym, [])
        keys = seen.setdefault(ex.acronym, set())
        for option in ex.gold_options():
            key = _dedup_key(option)
            if key and key not in keys:
                keys.add(key)
                bucket.append(option)
    return {a: defs for a, defs in derived.items() if defs}


def write_kb_source(content: dict[str, list[str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(content, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
