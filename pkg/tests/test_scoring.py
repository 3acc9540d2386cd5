from __future__ import annotations

import random

import pytest

from acrodis import LabeledExample, competence, score
from acrodis.scoring import ablation_run, split_train_validation, suggest_ensemble


def fs(*indices):
    return frozenset(indices)


# ---------------------------------------------------------------------------
# Brute-force scoring oracle: enumerate every (instance, option) boolean
# decision explicitly.

def brute_force_scores(predictions, gold, option_counts):
    tp = fp = fn = 0
    per_instance_f1 = []
    for iid, g in gold.items():
        p = predictions.get(iid, frozenset())
        for opt in range(option_counts[iid]):
            in_p, in_g = opt in p, opt in g
            if in_p and in_g:
                tp += 1
            elif in_p:
                fp += 1
            elif in_g:
                fn += 1
        if not p and not g:
            per_instance_f1.append(1.0)
        else:
            inter = len(p & g)
            prec = inter / len(p) if p else 0.0
            rec = inter / len(g) if g else 0.0
            per_instance_f1.append(
                2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    micro_p = tp / (tp + fp) if tp + fp else 1.0
    micro_r = tp / (tp + fn) if tp + fn else 1.0
    micro = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    macro = sum(per_instance_f1) / len(per_instance_f1) if per_instance_f1 else 0.0
    return micro, macro


class TestScore:
    def test_perfect_predictions(self):
        gold = {"a": fs(0), "b": fs(1, 2), "c": fs()}
        report = score(dict(gold), gold)
        assert report.micro_f1 == 1.0
        assert report.macro_f1 == 1.0

    def test_hand_case_over_selection(self):
        report = score({"x": fs(0, 1)}, {"x": fs(0)})
        inst = report.per_instance[0]
        assert inst.precision == 0.5
        assert inst.recall == 1.0
        assert inst.f1 == pytest.approx(2 / 3)
        assert report.micro_f1 == pytest.approx(2 / 3)

    def test_fully_disjoint_is_zero(self):
        report = score({"a": fs(1), "b": fs(0)}, {"a": fs(0), "b": fs(1)})
        assert report.micro_f1 == 0.0
        assert report.macro_f1 == 0.0

    def test_empty_vs_empty_instance_is_perfect(self):
        report = score({"a": fs()}, {"a": fs()})
        assert report.per_instance[0].f1 == 1.0
        assert report.micro_f1 == 1.0  # no option decisions at all

    def test_missing_prediction_scored_as_empty(self):
        report = score({}, {"a": fs(0), "b": fs()})
        per = {s.id: s.f1 for s in report.per_instance}
        assert per == {"a": 0.0, "b": 1.0}

    def test_unknown_id_rejected(self):
        with pytest.raises(ValueError, match="ghost"):
            score({"ghost": fs(0)}, {"a": fs(0)})

    def test_permutation_invariant(self):
        gold = {f"i{k}": fs(k % 3) for k in range(10)}
        preds = {f"i{k}": fs((k + 1) % 3) for k in range(10)}
        a = score(preds, gold)
        b = score(dict(reversed(list(preds.items()))),
                  dict(reversed(list(gold.items()))))
        assert a.micro_f1 == b.micro_f1
        assert a.macro_f1 == b.macro_f1

    def test_matches_brute_force_on_random_pairings(self):
        rng = random.Random(404)
        for _ in range(100):
            n = rng.randint(1, 25)
            option_counts = {f"i{k}": rng.randint(1, 6) for k in range(n)}
            gold = {
                iid: frozenset(rng.sample(range(c), rng.randint(0, min(2, c))))
                for iid, c in option_counts.items()
            }
            preds = {
                iid: frozenset(rng.sample(range(c), rng.randint(0, c)))
                for iid, c in option_counts.items()
                if rng.random() < 0.9  # leave some ids unpredicted
            }
            report = score(preds, gold)
            micro, macro = brute_force_scores(preds, gold, option_counts)
            assert report.micro_f1 == pytest.approx(micro, abs=1e-12)
            assert report.macro_f1 == pytest.approx(macro, abs=1e-12)


class TestCompetence:
    def test_perfect_provider_selected(self):
        gold = {"a": fs(0), "b": fs(1)}
        table = competence(
            {"good": dict(gold), "bad": {"a": fs(1), "b": fs(0)}}, gold)
        assert table.best == "good"
        assert table.accuracy == {"good": 1.0, "bad": 0.0}

    def test_identical_providers_zero_disagreement(self):
        gold = {"a": fs(0)}
        preds = {"a": fs(1)}
        table = competence({"x": preds, "y": dict(preds)}, gold)
        assert table.disagreement[("x", "y")] == 0.0
        assert table.disagreement[("x", "x")] == 0.0

    def test_three_scripted_providers_hand_tabulated(self):
        gold = {"i1": fs(0), "i2": fs(1), "i3": fs(), "i4": fs(0, 1)}
        per_provider = {
            # right on i1, i2, i3, wrong on i4 -> accuracy 3/4
            "p1": {"i1": fs(0), "i2": fs(1), "i3": fs(), "i4": fs(0)},
            # right on i1 only -> accuracy 1/4
            "p2": {"i1": fs(0), "i2": fs(0), "i3": fs(0), "i4": fs()},
            # right on i2, i4 -> accuracy 2/4
            "p3": {"i1": fs(1), "i2": fs(1), "i3": fs(0), "i4": fs(0, 1)},
        }
        table = competence(per_provider, gold)
        assert table.accuracy == {"p1": 0.75, "p2": 0.25, "p3": 0.5}
        assert table.best == "p1"
        # p1 vs p2 differ on i2, i3, i4 -> 3/4
        assert table.disagreement[("p1", "p2")] == 0.75
        assert table.disagreement[("p2", "p1")] == 0.75

    def test_inconsistent_ids_rejected(self):
        gold = {"a": fs(0), "b": fs(0)}
        with pytest.raises(ValueError, match="lacks predictions"):
            competence({"p": {"a": fs(0)}}, gold)

    def test_tie_broken_by_micro_f1_then_name(self):
        gold = {"a": fs(0, 1), "b": fs(0)}
        per_provider = {
            # both miss everything exactly; zeta has better micro f1
            "zeta": {"a": fs(0), "b": fs(1)},
            "alpha": {"a": fs(2), "b": fs(1)},
        }
        table = competence(per_provider, gold)
        assert table.best == "zeta"
        # true name tie
        table2 = competence(
            {"b": {"a": fs(0), "b": fs(0)}, "a": {"a": fs(0), "b": fs(0)}}, gold)
        assert table2.best == "a"


class TestSuggestEnsemble:
    def test_top_two_plus_most_disagreeing_rest(self):
        gold = {f"i{k}": fs(k % 2) for k in range(10)}
        providers = {
            "strong": dict(gold),
            "good": {k: (v if int(k[1:]) < 8 else fs(1 - (int(k[1:]) % 2)))
                     for k, v in gold.items()},
            "odd": {k: fs() for k in gold},
        }
        table = competence(providers, gold)
        subset, tie_breaker, best = suggest_ensemble(table, subset_size=2)
        assert set(subset) == {"strong", "good"}
        assert tie_breaker == "odd"
        assert best == "strong"

    def test_needs_enough_providers(self):
        gold = {"a": fs(0)}
        table = competence({"x": {"a": fs(0)}, "y": {"a": fs(0)}}, gold)
        with pytest.raises(ValueError, match="at least 3"):
            suggest_ensemble(table, subset_size=2)


def _example(i, acronym):
    return LabeledExample(id=f"e{i}", acronym=acronym, context=f"ctx {i}",
                          options=("a", "b"), gold=frozenset({i % 2}))


class TestSplit:
    def test_seeded_and_deterministic(self):
        examples = [_example(i, f"AC{i % 5}") for i in range(50)]
        a = split_train_validation(examples, 0.8, seed=3)
        b = split_train_validation(examples, 0.8, seed=3)
        assert a == b
        c = split_train_validation(examples, 0.8, seed=4)
        assert a != c

    def test_partition_complete_and_disjoint(self):
        examples = [_example(i, f"AC{i % 7}") for i in range(40)]
        train, val = split_train_validation(examples, 0.8, seed=1)
        assert sorted(e.id for e in train + val) == sorted(e.id for e in examples)
        assert not {e.id for e in train} & {e.id for e in val}

    def test_stratified_where_possible(self):
        examples = [_example(i, "AA") for i in range(10)] + \
                   [_example(i + 10, "BB") for i in range(10)]
        train, val = split_train_validation(examples, 0.8, seed=2)
        train_acs = {e.acronym for e in train}
        val_acs = {e.acronym for e in val}
        assert train_acs == {"AA", "BB"}
        assert val_acs == {"AA", "BB"}


class TestAblationRun:
    def test_single_variant_single_row(self):
        gold = {"a": fs(0)}
        rows = ablation_run(
            [("only", lambda instances: {"a": fs(0)})], [], gold)
        assert len(rows) == 1
        assert rows[0][0] == "only"
        assert rows[0][1].micro_f1 == 1.0

    def test_failure_attributed_to_variant(self):
        def boom(instances):
            raise RuntimeError("kaput")

        with pytest.raises(RuntimeError, match="variant 'bad'"):
            ablation_run([("bad", boom)], [], {"a": fs(0)})
