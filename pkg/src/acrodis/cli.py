"""Command-line entry point.

Commands:
    stats     corpus statistics and seen/unseen partition sizes
    build-kb  derive the training KB source and report the merged KB
    predict   run the full pipeline and write a submission file
    score     score a submission against gold labels
    ablate    compare named pipeline variants on a labeled split

Every command takes --config pointing at a JSON run configuration
(see runconfig). Provider credentials come from environment variables
named in the config; --mock replaces all providers with deterministic
mocks so the pipeline runs offline.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import pipeline as pl
from .dataset import load_test, load_training, partition_acronyms, corpus_stats
from .gateway import (
    MockProvider, ResponseCache, build_provider, echo_gold_responder,
    template_aware_responder, verbatim_context_responder,
)
from .knowledge import derive_from_training, write_kb_source
from .runconfig import (
    POLICY_DYNAMIC, POLICY_FORCE_A, POLICY_FORCE_B, RunConfig, load_config,
)
from .scoring import ablation_run, score as score_predictions

MOCK_RULES = ("echo-gold", "verbatim", "template-aware")

ABLATION_VARIANTS = ("template_a_only", "template_b_only", "dynamic", "ensemble")


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    updates = {}
    if getattr(args, "tau", None) is not None:
        updates["tau"] = args.tau
    if getattr(args, "parallelism", None) is not None:
        updates["parallelism"] = args.parallelism
    if getattr(args, "run_dir", None) is not None:
        updates["run_dir"] = args.run_dir
    return dataclasses.replace(config, **updates) if updates else config


def _run_dir(config: RunConfig) -> Path:
    if config.run_dir:
        d = Path(config.run_dir)
    else:
        d = Path("runs") / time.strftime("%Y%m%d-%H%M%S")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_kinds(path: str) -> dict[str, str]:
    kinds = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "kind" in rec:
                kinds[rec["id"]] = rec["kind"]
    return kinds


def _mock_providers(config: RunConfig, rule: str, gold_path: str | None,
                    test_path: str) -> dict[str, object]:
    if rule in ("echo-gold", "template-aware"):
        if not gold_path:
            raise SystemExit(f"--mock {rule} requires --mock-gold PATH")
        gold = pl.load_gold(gold_path)
        if rule == "echo-gold":
            make = lambda: echo_gold_responder(gold)  # noqa: E731
        else:
            kinds = _load_kinds(gold_path)
            missing = sorted(set(gold) - set(kinds))
            if missing:
                raise SystemExit(
                    "--mock template-aware needs a 'kind' field "
                    f"(seen/plain/ambiguous) per gold record; missing for "
                    f"{', '.join(missing[:5])}"
                )
            make = lambda: template_aware_responder(gold, kinds)  # noqa: E731
    elif rule == "verbatim":
        instances = load_test(test_path)
        make = lambda: verbatim_context_responder(instances)  # noqa: E731
    else:
        raise SystemExit(f"unknown mock rule {rule!r}; choose from {MOCK_RULES}")
    names = set(p.name for p in config.providers)
    if config.ensemble:
        names.update(config.ensemble.subset)
        names.add(config.ensemble.tie_breaker)
        names.add(config.ensemble.best)
    return {name: MockProvider(name=name, responder=make()) for name in sorted(names)}


def _live_providers(config: RunConfig) -> dict[str, object]:
    providers = {}
    for spec in config.providers:
        providers[spec.name] = build_provider(spec)
    return providers


def cmd_stats(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    train = load_training(config.train_path)
    stats = corpus_stats(train)
    print(f"training examples:      {stats.example_count}")
    print(f"unique acronyms:        {stats.unique_acronym_count}")
    print(f"zero-correct examples:  {stats.zero_correct_count}")
    print(f"multi-correct examples: {stats.multi_correct_count}")
    print("option-count histogram:")
    for count, freq in stats.option_count_histogram.items():
        print(f"  {count:3d} options: {freq}")
    if config.test_path:
        test = load_test(config.test_path)
        partition = partition_acronyms(train, test)
        print(f"test instances:         {len(test)}")
        print(f"seen test acronyms:     {len(partition.seen)}")
        print(f"unseen test acronyms:   {len(partition.unseen)}")
    if args.json:
        payload = dataclasses.asdict(stats)
        if config.test_path:
            payload["test_instances"] = len(test)
            payload["seen_acronyms"] = len(partition.seen)
            payload["unseen_acronyms"] = len(partition.unseen)
        Path(args.json).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_build_kb(args) -> int:
    config = load_config(args.config)
    train = load_training(config.train_path)
    derived = derive_from_training(train)
    out = Path(args.out)
    write_kb_source(derived, out)
    kb = pl.assemble_kb(config, train)
    print(f"training-derived KB source written to {out} "
          f"({len(derived)} acronyms)")
    print(f"merged KB covers {len(kb)} acronyms "
          f"from {len(config.kb_sources)} configured source(s) + training")
    return 0


def _predict(config: RunConfig, args) -> tuple[Path, list[pl.InstanceResult]]:
    if not config.test_path:
        raise SystemExit("config has no test_path")
    if config.ensemble is None:
        raise SystemExit("config has no ensemble block")
    run_dir = _run_dir(config)
    cache = ResponseCache(run_dir / "responses.cache")
    if args.mock:
        providers = _mock_providers(
            config, args.mock, args.mock_gold, config.test_path
        )
    else:
        providers = _live_providers(config)
    for name in (*config.ensemble.subset, config.ensemble.tie_breaker,
                 config.ensemble.best):
        if name not in providers:
            raise SystemExit(f"ensemble references unconfigured provider {name!r}")

    test = load_test(config.test_path)
    ctx = pl.build_context(config, providers, cache, test)
    results = pl.run_predictions(ctx, test)

    (run_dir / "config.json").write_text(
        json.dumps(config.as_dict(), indent=2, ensure_ascii=False, default=str) + "\n",
        encoding="utf-8",
    )
    with open(run_dir / "decisions.jsonl", "w", encoding="utf-8") as f:
        for r in results:
            f.write(json.dumps({
                "id": r.instance_id,
                "template": r.decision.template,
                "fewshot": r.decision.fewshot,
                "reason": r.decision.reason.value,
                "s_max": r.decision.s_max,
                "fewshot_ids": list(r.fewshot_ids),
                "resolve_path": r.resolve_path,
                "error": r.error,
            }, ensure_ascii=False) + "\n")
    # rendering is pure, so the prompt log is a faithful replay
    with open(run_dir / "prompts.jsonl", "w", encoding="utf-8") as f:
        for instance in test:
            try:
                bundle = pl.build_bundle(ctx, instance)
            except Exception as e:
                record = {"id": instance.id, "error": f"{type(e).__name__}: {e}"}
            else:
                record = {"id": instance.id,
                          "template": bundle.decision.template,
                          "labels": list(bundle.labels),
                          "text": bundle.text}
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    submission = run_dir / "submission.jsonl"
    pl.write_submission(results, submission)
    return submission, results


def cmd_predict(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    submission, results = _predict(config, args)
    by_template = {}
    for r in results:
        by_template[r.decision.template] = by_template.get(r.decision.template, 0) + 1
    n_fewshot = sum(1 for r in results if r.decision.fewshot)
    print(f"predicted {len(results)} instances -> {submission}")
    print(f"template usage: {by_template}; few-shot prompts: {n_fewshot}")
    return 0


def cmd_score(args) -> int:
    predictions = pl.load_submission(args.submission)
    gold = pl.load_gold(args.gold)
    report = score_predictions(predictions, gold)
    print(f"micro F1: {report.micro_f1:.4f}  "
          f"(P {report.micro_precision:.4f} / R {report.micro_recall:.4f})")
    print(f"macro F1: {report.macro_f1:.4f} over {len(report.per_instance)} instances")
    if args.json:
        Path(args.json).write_text(
            json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def _variant_config(base: RunConfig, name: str) -> RunConfig:
    single = None
    if base.ensemble is not None:
        single = dataclasses.replace(
            base.ensemble, subset=(base.ensemble.best,)
        ) if base.ensemble.best != base.ensemble.tie_breaker else base.ensemble
    if name == "template_a_only":
        return dataclasses.replace(base, template_policy=POLICY_FORCE_A,
                                   ensemble=single)
    if name == "template_b_only":
        return dataclasses.replace(base, template_policy=POLICY_FORCE_B,
                                   ensemble=single)
    if name == "dynamic":
        return dataclasses.replace(base, template_policy=POLICY_DYNAMIC,
                                   ensemble=single)
    if name == "ensemble":
        return dataclasses.replace(base, template_policy=POLICY_DYNAMIC)
    raise SystemExit(
        f"unknown ablation variant {name!r}; choose from {ABLATION_VARIANTS}"
    )


def cmd_ablate(args) -> int:
    base = _apply_overrides(load_config(args.config), args)
    if not base.test_path:
        raise SystemExit("config has no test_path")
    gold = pl.load_gold(args.gold)
    names = [v.strip() for v in args.variants.split(",") if v.strip()]
    test = load_test(base.test_path)
    run_dir = _run_dir(base)

    variants = []
    for name in names:
        vconfig = _variant_config(base, name)

        def predict_fn(instances, vconfig=vconfig, name=name):
            cache = ResponseCache(run_dir / f"responses-{name}.cache")
            if args.mock:
                providers = _mock_providers(
                    vconfig, args.mock, args.mock_gold, vconfig.test_path
                )
            else:
                providers = _live_providers(vconfig)
            ctx = pl.build_context(vconfig, providers, cache, instances)
            results = pl.run_predictions(ctx, instances)
            return {r.instance_id: r.prediction for r in results}

        variants.append((name, predict_fn))

    rows = ablation_run(variants, test, gold)
    out = Path(args.out) if args.out else run_dir / "ablation.csv"
    with open(out, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "micro_f1", "macro_f1",
                         "micro_precision", "micro_recall"])
        for name, report in rows:
            writer.writerow([
                name, f"{report.micro_f1:.6f}", f"{report.macro_f1:.6f}",
                f"{report.micro_precision:.6f}", f"{report.micro_recall:.6f}",
            ])
    for name, report in rows:
        print(f"{name:18s} micro_f1={report.micro_f1:.4f} "
              f"macro_f1={report.macro_f1:.4f}")
    print(f"ablation table -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acrodis",
        description="Acronym disambiguation pipeline (routing, retrieval, "
                    "knowledge grounding, ensemble voting).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, mock=False):
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--tau", type=float, default=None,
                       help="override routing threshold")
        p.add_argument("--parallelism", type=int, default=None)
        p.add_argument("--run-dir", default=None)
        if mock:
            p.add_argument("--mock", choices=MOCK_RULES, default=None,
                           help="replace providers with a deterministic mock")
            p.add_argument("--mock-gold", default=None,
                           help="gold file for gold-aware mock rules")

    p_stats = sub.add_parser("stats", help="corpus statistics")
    add_common(p_stats)
    p_stats.add_argument("--json", default=None, help="also write stats JSON")
    p_stats.set_defaults(fn=cmd_stats)

    p_kb = sub.add_parser("build-kb", help="derive and report the KB")
    p_kb.add_argument("--config", required=True)
    p_kb.add_argument("--out", required=True,
                      help="path for the training-derived KB source")
    p_kb.set_defaults(fn=cmd_build_kb)

    p_predict = sub.add_parser("predict", help="run the pipeline")
    add_common(p_predict, mock=True)
    p_predict.set_defaults(fn=cmd_predict)

    p_score = sub.add_parser("score", help="score a submission")
    p_score.add_argument("submission")
    p_score.add_argument("gold")
    p_score.add_argument("--json", default=None, help="also write report JSON")
    p_score.set_defaults(fn=cmd_score)

    p_ablate = sub.add_parser("ablate", help="compare pipeline variants")
    add_common(p_ablate, mock=True)
    p_ablate.add_argument("--gold", required=True)
    p_ablate.add_argument(
        "--variants", default=",".join(ABLATION_VARIANTS),
        help=f"comma-separated names from {ABLATION_VARIANTS}",
    )
    p_ablate.add_argument("--out", default=None, help="CSV output path")
    p_ablate.set_defaults(fn=cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
