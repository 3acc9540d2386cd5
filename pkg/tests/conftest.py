from __future__ import annotations

import json
from pathlib import Path

import pytest

from acrodis import build_index, load_test, load_training, partition_acronyms

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def manifest() -> dict:
    with open(FIXTURES / "manifest.json", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture(scope="session")
def train_examples():
    return load_training(FIXTURES / "train.jsonl")


@pytest.fixture(scope="session")
def test_instances():
    return load_test(FIXTURES / "test.jsonl")


@pytest.fixture(scope="session")
def partition(train_examples, test_instances):
    return partition_acronyms(train_examples, test_instances)


@pytest.fixture(scope="session")
def index(train_examples):
    return build_index(train_examples)


@pytest.fixture(scope="session")
def stem_fixtures() -> dict[str, str]:
    with open(FIXTURES / "french_stems.json", encoding="utf-8") as f:
        return json.load(f)
