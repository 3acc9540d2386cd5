"""Run configuration: one JSON file drives every pipeline command.

Example:

    {
      "train_path": "data/train.jsonl",
      "test_path": "data/test.jsonl",
      "kb_sources": [["glossary", "kb/glossary.json"]],
      "derive_kb_from_training": true,
      "bm25": {"k1": 1.2, "b": 0.75},
      "selection": {"n_fs": 6, "dedup_threshold": 0.9, "pool_size": 50},
      "tau": 0.5,
      "template_policy": "dynamic",
      "providers": [
        {"name": "claude-3-5-sonnet", "adapter": "anthropic",
         "endpoint": "https://api.anthropic.com",
         "auth_env": "ANTHROPIC_API_KEY",
         "model": "claude-3-5-sonnet-20241022"}
      ],
      "ensemble": {"subset": ["claude-3-5-sonnet", "claude-opus-4-1"],
                   "tie_breaker": "gemini-2.5-pro",
                   "best": "claude-3-5-sonnet"},
      "parallelism": 4,
      "error_budget": 0,
      "seed": 13
    }
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .bm25 import Bm25Params
from .ensemble import EnsembleConfig
from .gateway import DecodingProfile, ProviderSpec
from .selection import SelectionConfig

POLICY_DYNAMIC = "dynamic"
POLICY_FORCE_A = "force_a"
POLICY_FORCE_B = "force_b"
TEMPLATE_POLICIES = (POLICY_DYNAMIC, POLICY_FORCE_A, POLICY_FORCE_B)


@dataclass(frozen=True)
class RunConfig:
    train_path: str
    test_path: str | None = None
    kb_sources: tuple[tuple[str, str], ...] = ()
    derive_kb_from_training: bool = True
    bm25: Bm25Params = field(default_factory=Bm25Params)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    tau: float = 0.5
    template_policy: str = POLICY_DYNAMIC
    providers: tuple[ProviderSpec, ...] = ()
    ensemble: EnsembleConfig | None = None
    run_dir: str | None = None
    parallelism: int = 4
    error_budget: int = 0
    seed: int = 13

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.error_budget < 0:
            raise ValueError("error_budget must be >= 0")
        if self.template_policy not in TEMPLATE_POLICIES:
            raise ValueError(
                f"template_policy must be one of {TEMPLATE_POLICIES}"
            )

    def provider_specs(self) -> dict[str, ProviderSpec]:
        return {p.name: p for p in self.providers}

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _provider_from_dict(obj: dict) -> ProviderSpec:
    decoding = DecodingProfile(
        temperature=float(obj.get("temperature", 0.0)),
        structured_output=bool(obj.get("structured_output", True)),
    )
    return ProviderSpec(
        name=obj["name"],
        adapter=obj.get("adapter", "mock"),
        endpoint=obj.get("endpoint", ""),
        auth_env=obj.get("auth_env", ""),
        model=obj.get("model", ""),
        decoding=decoding,
        max_retries=int(obj.get("max_retries", 3)),
        backoff_seconds=float(obj.get("backoff_seconds", 0.5)),
    )


def config_from_dict(obj: dict, base_dir: Path | None = None) -> RunConfig:
    def resolve(p: str | None) -> str | None:
        if p is None or base_dir is None:
            return p
        return str((base_dir / p).resolve()) if not Path(p).is_absolute() else p

    ensemble = None
    if "ensemble" in obj and obj["ensemble"]:
        e = obj["ensemble"]
        ensemble = EnsembleConfig(
            subset=tuple(e["subset"]),
            tie_breaker=e["tie_breaker"],
            best=e["best"],
            min_winning_fraction=float(e.get("min_winning_fraction", 0.5)),
        )
    return RunConfig(
        train_path=resolve(obj["train_path"]),
        test_path=resolve(obj.get("test_path")),
        kb_sources=tuple(
            (tag, resolve(path)) for tag, path in obj.get("kb_sources", [])
        ),
        derive_kb_from_training=bool(obj.get("derive_kb_from_training", True)),
        bm25=Bm25Params(**obj.get("bm25", {})),
        selection=SelectionConfig(**obj.get("selection", {})),
        tau=float(obj.get("tau", 0.5)),
        template_policy=obj.get("template_policy", POLICY_DYNAMIC),
        providers=tuple(
            _provider_from_dict(p) for p in obj.get("providers", [])
        ),
        ensemble=ensemble,
        run_dir=resolve(obj.get("run_dir")),
        parallelism=int(obj.get("parallelism", 4)),
        error_budget=int(obj.get("error_budget", 0)),
        seed=int(obj.get("seed", 13)),
    )


def load_config(path: str | Path) -> RunConfig:
    """Parse a config file; relative paths resolve against its directory."""
    p = Path(path)
    with open(p, encoding="utf-8") as f:
        obj = json.load(f)
    config = config_from_dict(obj, base_dir=p.parent)
    missing = [
        c for c in (config.train_path, config.test_path,
                    *(s[1] for s in config.kb_sources))
        if c is not None and not Path(c).exists()
    ]
    if missing:
        raise FileNotFoundError(
            f"config references missing path(s): {', '.join(missing)}"
        )
    return config
