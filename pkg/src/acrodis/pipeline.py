"""End-to-end prediction pipeline.

Per test instance: route to a template, curate few-shots for seen
acronyms, ground with knowledge-base definitions, render the prompt,
broadcast to the ensemble subset through the response cache, and resolve
the final prediction set. Instances run concurrently under a bounded
worker pool; all shared structures are immutable except the cache, which
serializes its own appends, so output is deterministic for any
parallelism once responses are cached or mocked.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .bm25 import Bm25Index, build_index
from .dataset import (
    AcronymPartition, LabeledExample, TestInstance, load_training,
    partition_acronyms,
)
from .ensemble import EMPTY_PREDICTION, PredictionSet, resolve, verdict_to_prediction
from .gateway import ResponseCache, cached_complete
from .knowledge import (
    KnowledgeBase, SOURCE_TRAINING, derive_from_training, merge_kb_contents,
)
from .prompts import (
    PromptBundle, RouteReason, RoutingDecision, TEMPLATE_A, TEMPLATE_B,
    render, route,
)
from .runconfig import POLICY_FORCE_A, POLICY_FORCE_B, RunConfig
from .selection import EMPTY_FEWSHOT, select_fewshot


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class InstanceResult:
    instance_id: str
    prediction: PredictionSet
    resolve_path: str
    decision: RoutingDecision
    fewshot_ids: tuple[str, ...]
    error: str | None = None


@dataclass(frozen=True)
class PipelineContext:
    """Everything a prediction run needs, built once and shared read-only."""

    config: RunConfig
    train: list[LabeledExample]
    partition: AcronymPartition
    index: Bm25Index
    kb: KnowledgeBase
    providers: dict[str, object]
    cache: ResponseCache


def build_context(
    config: RunConfig,
    providers: dict[str, object],
    cache: ResponseCache,
    test: list[TestInstance],
) -> PipelineContext:
    train = load_training(config.train_path)
    partition = partition_acronyms(train, test)
    index = build_index(train, config.bm25)
    kb = assemble_kb(config, train)
    return PipelineContext(
        config=config, train=train, partition=partition, index=index,
        kb=kb, providers=providers, cache=cache,
    )


def assemble_kb(config: RunConfig, train: list[LabeledExample]) -> KnowledgeBase:
    contents = []
    for tag, path in config.kb_sources:
        with open(path, encoding="utf-8") as f:
            contents.append((tag, json.load(f), str(path)))
    if config.derive_kb_from_training:
        contents.append(
            (SOURCE_TRAINING, derive_from_training(train), "<training>")
        )
    return merge_kb_contents(contents)


def decide(ctx: PipelineContext, instance: TestInstance) -> RoutingDecision:
    """Routing decision, honoring a forced template policy (ablations).

    Forced decisions keep the type's invariants intact: few-shots only
    for seen acronyms, and the strict template always carries the
    ambiguous reason. The active policy is recorded in the run config
    snapshot, so forced reasons are never mistaken for routed ones.
    """
    decision = route(instance, ctx.partition, ctx.config.tau)
    policy = ctx.config.template_policy
    if policy == POLICY_FORCE_A:
        return dataclasses.replace(
            decision, template=TEMPLATE_A,
            fewshot=decision.reason is RouteReason.SEEN,
        )
    if policy == POLICY_FORCE_B:
        return dataclasses.replace(
            decision, template=TEMPLATE_B, fewshot=False,
            reason=RouteReason.UNSEEN_AMBIGUOUS,
        )
    return decision


def build_bundle(ctx: PipelineContext, instance: TestInstance) -> PromptBundle:
    decision = decide(ctx, instance)
    fewshots = EMPTY_FEWSHOT
    if decision.fewshot:
        fewshots = select_fewshot(
            instance, ctx.index, ctx.train, ctx.config.selection
        )
    definitions = ctx.kb.lookup(instance.acronym)
    return render(instance, decision, fewshots, definitions)


def _predict_one(ctx: PipelineContext, instance: TestInstance) -> InstanceResult:
    ensemble = ctx.config.ensemble
    if ensemble is None:
        raise PipelineError("config has no ensemble block")
    bundle = build_bundle(ctx, instance)

    predictions: dict[str, PredictionSet] = {}
    for name in ensemble.subset:
        verdict = cached_complete(ctx.cache, ctx.providers[name], bundle)
        predictions[name] = verdict_to_prediction(verdict, instance.options)

    def tie_breaker() -> PredictionSet:
        verdict = cached_complete(
            ctx.cache, ctx.providers[ensemble.tie_breaker], bundle
        )
        return verdict_to_prediction(verdict, instance.options)

    final, path = resolve(predictions, ensemble, tie_breaker)
    return InstanceResult(
        instance_id=instance.id,
        prediction=final,
        resolve_path=path.value,
        decision=bundle.decision,
        fewshot_ids=bundle.fewshot_ids,
    )


def run_predictions(
    ctx: PipelineContext, instances: list[TestInstance]
) -> list[InstanceResult]:
    """Predict every instance, preserving input order in the output."""
    def safe(instance: TestInstance) -> InstanceResult:
        try:
            return _predict_one(ctx, instance)
        except Exception as e:
            return InstanceResult(
                instance_id=instance.id,
                prediction=EMPTY_PREDICTION,
                resolve_path="error",
                decision=decide(ctx, instance),
                fewshot_ids=(),
                error=f"{type(e).__name__}: {e}",
            )

    workers = ctx.config.parallelism
    if workers == 1:
        results = [safe(inst) for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(safe, instances))

    failures = [r for r in results if r.error]
    if len(failures) > ctx.config.error_budget:
        first = failures[0]
        raise PipelineError(
            f"{len(failures)} instance(s) failed (budget "
            f"{ctx.config.error_budget}); first: {first.instance_id}: "
            f"{first.error}"
        )
    return results


def write_submission(results: list[InstanceResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in results:
            f.write(json.dumps(
                {"id": r.instance_id, "predicted": sorted(r.prediction)},
                ensure_ascii=False,
            ) + "\n")


def load_submission(path: str | Path) -> dict[str, PredictionSet]:
    predictions = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            predictions[rec["id"]] = frozenset(rec["predicted"])
    return predictions


def load_gold(path: str | Path) -> dict[str, frozenset[int]]:
    """Gold labels from a dataset-format JSONL (id + gold fields) or a
    plain JSON object mapping id -> index list."""
    text = Path(path).read_text(encoding="utf-8").strip()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = None
    if isinstance(obj, dict):
        if "id" in obj and "options" in obj:  # single dataset record
            return {obj["id"]: frozenset(obj.get("gold", []))}
        return {k: frozenset(v) for k, v in obj.items()}
    gold = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        gold[rec["id"]] = frozenset(rec.get("gold", []))
    return gold
