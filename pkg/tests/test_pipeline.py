from __future__ import annotations

import csv
import json

import pytest

from acrodis import ResponseCache, load_test
from acrodis.cli import main
from acrodis.gateway import MockProvider, echo_gold_responder
from acrodis.pipeline import (
    PipelineError, build_context, load_gold, load_submission, run_predictions,
)
from acrodis.runconfig import load_config


@pytest.fixture()
def gold(fixtures_dir):
    return load_gold(fixtures_dir / "test_gold.jsonl")


def run_cli(*argv):
    return main([str(a) for a in argv])


def predict_cli(fixtures_dir, run_dir, *extra):
    return run_cli(
        "predict", "--config", fixtures_dir / "runconfig.json",
        "--run-dir", run_dir, "--mock", "echo-gold",
        "--mock-gold", fixtures_dir / "test_gold.jsonl", *extra,
    )


class TestPredictCommand:
    def test_echo_gold_submission_equals_gold(self, fixtures_dir, tmp_path, gold):
        assert predict_cli(fixtures_dir, tmp_path / "run") == 0
        submission = load_submission(tmp_path / "run" / "submission.jsonl")
        assert submission == gold

    def test_submission_order_matches_input(self, fixtures_dir, tmp_path):
        predict_cli(fixtures_dir, tmp_path / "run")
        ids = [json.loads(line)["id"] for line in
               open(tmp_path / "run" / "submission.jsonl", encoding="utf-8")]
        test_ids = [t.id for t in load_test(fixtures_dir / "test.jsonl")]
        assert ids == test_ids

    def test_byte_identical_across_runs_and_parallelism(self, fixtures_dir,
                                                        tmp_path):
        blobs = set()
        for i, par in enumerate(("1", "8", "1")):
            run_dir = tmp_path / f"run{i}"
            predict_cli(fixtures_dir, run_dir, "--parallelism", par)
            blobs.add((run_dir / "submission.jsonl").read_bytes())
        assert len(blobs) == 1

    def test_warm_cache_rerun_identical(self, fixtures_dir, tmp_path):
        run_dir = tmp_path / "run"
        predict_cli(fixtures_dir, run_dir)
        first = (run_dir / "submission.jsonl").read_bytes()
        predict_cli(fixtures_dir, run_dir)  # cache already primed
        assert (run_dir / "submission.jsonl").read_bytes() == first

    def test_run_artifacts_present(self, fixtures_dir, tmp_path):
        run_dir = tmp_path / "run"
        predict_cli(fixtures_dir, run_dir)
        for name in ("submission.jsonl", "decisions.jsonl", "prompts.jsonl",
                     "config.json", "responses.cache"):
            assert (run_dir / name).exists(), name
        prompts = [json.loads(line) for line in
                   open(run_dir / "prompts.jsonl", encoding="utf-8")]
        test_ids = [t.id for t in load_test(fixtures_dir / "test.jsonl")]
        assert [p["id"] for p in prompts] == test_ids
        assert all("text" in p for p in prompts)

    def test_decision_log_matches_routing_replay(self, fixtures_dir, tmp_path,
                                                 manifest):
        run_dir = tmp_path / "run"
        predict_cli(fixtures_dir, run_dir)
        kinds = {"seen": ("A", True), "ambiguous": ("B", False),
                 "plain": ("A", False)}
        for line in open(run_dir / "decisions.jsonl", encoding="utf-8"):
            rec = json.loads(line)
            expected = kinds[manifest["test_kinds"][rec["id"]]]
            assert (rec["template"], rec["fewshot"]) == expected

    def test_unscripted_instance_budget_zero_fails_naming_it(
            self, fixtures_dir, tmp_path, gold):
        partial = dict(gold)
        partial.pop("te-7")
        gold_path = tmp_path / "partial_gold.json"
        gold_path.write_text(
            json.dumps({k: sorted(v) for k, v in partial.items()}),
            encoding="utf-8",
        )
        with pytest.raises(PipelineError, match="te-7"):
            run_cli("predict", "--config", fixtures_dir / "runconfig.json",
                    "--run-dir", tmp_path / "run", "--mock", "echo-gold",
                    "--mock-gold", gold_path)

    def test_error_budget_allows_empty_fallback(self, fixtures_dir, tmp_path,
                                                gold):
        partial = dict(gold)
        partial.pop("te-7")
        gold_path = tmp_path / "partial_gold.json"
        gold_path.write_text(
            json.dumps({k: sorted(v) for k, v in partial.items()}),
            encoding="utf-8",
        )
        config_obj = json.load(open(fixtures_dir / "runconfig.json"))
        config_obj["error_budget"] = 1
        config_obj["train_path"] = str(fixtures_dir / "train.jsonl")
        config_obj["test_path"] = str(fixtures_dir / "test.jsonl")
        config_obj["kb_sources"] = [
            [tag, str(fixtures_dir / path)]
            for tag, path in config_obj["kb_sources"]
        ]
        budget_config = tmp_path / "config.json"
        budget_config.write_text(json.dumps(config_obj), encoding="utf-8")
        run_cli("predict", "--config", budget_config,
                "--run-dir", tmp_path / "run", "--mock", "echo-gold",
                "--mock-gold", gold_path)
        submission = load_submission(tmp_path / "run" / "submission.jsonl")
        assert submission["te-7"] == frozenset()
        del submission["te-7"]
        assert all(submission[k] == partial[k] for k in submission)


class TestScoreCommand:
    def test_perfect_submission_scores_one(self, fixtures_dir, tmp_path, capsys):
        predict_cli(fixtures_dir, tmp_path / "run")
        out_json = tmp_path / "score.json"
        run_cli("score", tmp_path / "run" / "submission.jsonl",
                fixtures_dir / "test_gold.jsonl", "--json", out_json)
        report = json.loads(out_json.read_text(encoding="utf-8"))
        assert report["micro_f1"] == 1.0
        assert report["macro_f1"] == 1.0
        assert "micro F1: 1.0000" in capsys.readouterr().out

    def test_empty_predictions_convention(self, tmp_path):
        sub = tmp_path / "sub.jsonl"
        sub.write_text('{"id": "a", "predicted": []}\n'
                       '{"id": "b", "predicted": []}\n', encoding="utf-8")
        gold_file = tmp_path / "gold.json"
        gold_file.write_text('{"a": [0], "b": []}', encoding="utf-8")
        out_json = tmp_path / "score.json"
        run_cli("score", sub, gold_file, "--json", out_json)
        report = json.loads(out_json.read_text(encoding="utf-8"))
        assert report["micro_f1"] == 0.0  # the only option decision is missed
        assert report["macro_f1"] == 0.5  # empty-gold instance counts 1.0


class TestStatsCommand:
    def test_fixture_counts(self, fixtures_dir, tmp_path, manifest, capsys):
        out = tmp_path / "stats.json"
        run_cli("stats", "--config", fixtures_dir / "runconfig.json",
                "--json", out)
        stats = json.loads(out.read_text(encoding="utf-8"))
        assert stats["example_count"] == manifest["train_count"]
        assert stats["zero_correct_count"] == manifest["zero_correct_count"]
        assert stats["multi_correct_count"] == manifest["multi_correct_count"]
        assert stats["test_instances"] == manifest["test_count"]
        assert stats["unseen_acronyms"] == len(manifest["unseen_test_acronyms"])
        assert "unseen test acronyms" in capsys.readouterr().out

    def test_missing_file_reports_path(self, tmp_path):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"train_path": "absent.jsonl"}),
                          encoding="utf-8")
        with pytest.raises(FileNotFoundError, match="absent.jsonl"):
            run_cli("stats", "--config", config)


class TestBuildKbCommand:
    def test_derived_source_written(self, fixtures_dir, tmp_path, manifest,
                                    capsys):
        out = tmp_path / "derived.json"
        run_cli("build-kb", "--config", fixtures_dir / "runconfig.json",
                "--out", out)
        derived = json.loads(out.read_text(encoding="utf-8"))
        assert derived == manifest["derived_kb"]
        assert "merged KB covers" in capsys.readouterr().out


class TestAblateCommand:
    def ablate(self, fixtures_dir, tmp_path, out_name="ablation.csv"):
        out = tmp_path / out_name
        run_cli("ablate", "--config", fixtures_dir / "runconfig.json",
                "--run-dir", tmp_path / "run", "--mock", "template-aware",
                "--mock-gold", fixtures_dir / "test_gold.jsonl",
                "--gold", fixtures_dir / "test_gold.jsonl", "--out", out)
        with open(out, encoding="utf-8") as f:
            return {row["variant"]: row for row in csv.DictReader(f)}

    def test_four_rows_and_dynamic_beats_static(self, fixtures_dir, tmp_path):
        rows = self.ablate(fixtures_dir, tmp_path)
        assert set(rows) == {"template_a_only", "template_b_only",
                             "dynamic", "ensemble"}
        dynamic = float(rows["dynamic"]["micro_f1"])
        assert dynamic == 1.0
        assert dynamic >= float(rows["template_a_only"]["micro_f1"])
        assert dynamic >= float(rows["template_b_only"]["micro_f1"])
        # the mixed fixture makes both static baselines strictly worse
        assert float(rows["template_a_only"]["micro_f1"]) < 1.0
        assert float(rows["template_b_only"]["micro_f1"]) < 1.0
        assert float(rows["ensemble"]["micro_f1"]) == 1.0

    def test_cached_rerun_identical_table(self, fixtures_dir, tmp_path):
        first = self.ablate(fixtures_dir, tmp_path, "a1.csv")
        second = self.ablate(fixtures_dir, tmp_path, "a2.csv")
        assert first == second

    def test_unknown_variant_rejected(self, fixtures_dir, tmp_path):
        with pytest.raises(SystemExit, match="frobnicate"):
            run_cli("ablate", "--config", fixtures_dir / "runconfig.json",
                    "--run-dir", tmp_path / "run", "--mock", "template-aware",
                    "--mock-gold", fixtures_dir / "test_gold.jsonl",
                    "--gold", fixtures_dir / "test_gold.jsonl",
                    "--variants", "frobnicate")


class TestForcedPolicies:
    def test_decisions_keep_type_invariants_under_all_policies(
            self, fixtures_dir, tmp_path):
        import dataclasses

        from acrodis.gateway import MockProvider, echo_gold_responder
        from acrodis.pipeline import build_context, decide
        from acrodis.prompts import RouteReason

        gold = load_gold(fixtures_dir / "test_gold.jsonl")
        config = load_config(fixtures_dir / "runconfig.json")
        test = load_test(config.test_path)
        for policy in ("dynamic", "force_a", "force_b"):
            ctx = build_context(
                dataclasses.replace(config, template_policy=policy),
                {n: MockProvider(name=n, responder=echo_gold_responder(gold))
                 for n in ("mock-a", "mock-b", "mock-c", "mock-d")},
                ResponseCache(tmp_path / f"{policy}.cache"),
                test,
            )
            for inst in test:
                d = decide(ctx, inst)
                if d.template == "B":
                    assert d.reason is RouteReason.UNSEEN_AMBIGUOUS
                if d.fewshot:
                    assert d.reason is RouteReason.SEEN


class TestShippedConfigs:
    def test_configs_parse_and_validate(self, fixtures_dir):
        import pathlib

        from acrodis.runconfig import config_from_dict

        configs_dir = pathlib.Path(__file__).parent.parent / "configs"
        for name in ("default.json", "trio.json"):
            obj = json.loads((configs_dir / name).read_text(encoding="utf-8"))
            config = config_from_dict(obj)
            assert config.tau == 0.5
            assert config.ensemble is not None
            assert config.ensemble.tie_breaker not in config.ensemble.subset
            specs = config.provider_specs()
            for member in (*config.ensemble.subset, config.ensemble.tie_breaker,
                           config.ensemble.best):
                assert member in specs
            assert all(
                p.decoding.temperature == 0.0 for p in config.providers)


class TestPipelineApi:
    def test_counting_mocks_show_cache_hits(self, fixtures_dir, tmp_path, gold):
        config = load_config(fixtures_dir / "runconfig.json")
        providers = {
            name: MockProvider(name=name, responder=echo_gold_responder(gold))
            for name in ("mock-a", "mock-b", "mock-c", "mock-d")
        }
        cache = ResponseCache(tmp_path / "c.cache")
        test = load_test(config.test_path)
        ctx = build_context(config, providers, cache, test)
        first = run_predictions(ctx, test)
        calls_after_first = {n: p.call_count for n, p in providers.items()}
        assert calls_after_first["mock-d"] == 0  # unanimous: no tie-breaks
        second = run_predictions(ctx, test)
        assert {n: p.call_count for n, p in providers.items()} == calls_after_first
        assert [r.prediction for r in first] == [r.prediction for r in second]

    def test_lazy_tie_breaker_consulted_on_two_way_tie(self, fixtures_dir,
                                                       tmp_path, gold):
        import dataclasses

        config = load_config(fixtures_dir / "runconfig.json")
        config = dataclasses.replace(
            config,
            ensemble=dataclasses.replace(
                config.ensemble, subset=("mock-a", "mock-b"), best="mock-a"),
        )
        flipped = {k: (set(v) ^ {0}) for k, v in gold.items()}
        providers = {
            "mock-a": MockProvider(name="mock-a",
                                   responder=echo_gold_responder(gold)),
            "mock-b": MockProvider(name="mock-b",
                                   responder=echo_gold_responder(flipped)),
            "mock-d": MockProvider(name="mock-d",
                                   responder=echo_gold_responder(gold)),
        }
        cache = ResponseCache(tmp_path / "c.cache")
        test = load_test(config.test_path)
        ctx = build_context(config, providers, cache, test)
        results = run_predictions(ctx, test)
        # 1-vs-1 split on every instance; tie-breaker sides with gold
        assert providers["mock-d"].call_count == len(test)
        assert all(r.resolve_path == "tie_broken" for r in results)
        assert {r.instance_id: r.prediction for r in results} == gold
