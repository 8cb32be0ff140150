import fractions
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instructevo.model import Instruction
from instructevo.objectives import (
    DEGENERATE_SENTINEL,
    EvalSplitPolicy,
    EvaluationError,
    KeywordOracleEvaluator,
    MetricBundle,
    ObjectiveCache,
    cache_key,
    eval_length,
    eval_performance,
    eval_perplexity,
    evaluate,
    macro_prf,
)


class TestMetricBundle:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            MetricBundle(1.2, 0.5, 0.5, 0.5)

    def test_total(self):
        assert MetricBundle(0.8, 0.7, 0.75, 0.66).total() == pytest.approx(2.91)


class _FixedEvaluator:
    available_splits = frozenset({"validation", "test"})

    def __init__(self, bundle):
        self.bundle = bundle
        self.calls = []

    def evaluate(self, rendered, split):
        self.calls.append(split)
        return self.bundle


class TestEvalPerformance:
    def test_perfect_metrics(self):
        ev = _FixedEvaluator(MetricBundle(1.0, 1.0, 1.0, 1.0))
        assert eval_performance(Instruction("d"), ev) == pytest.approx(0.25)

    def test_half_metrics(self):
        ev = _FixedEvaluator(MetricBundle(0.5, 0.5, 0.5, 0.5))
        assert eval_performance(Instruction("d"), ev) == pytest.approx(0.5)

    def test_exact_for_rational_bundles(self):
        ev = _FixedEvaluator(MetricBundle(0.8, 0.7, 0.75, 0.66))
        got = eval_performance(Instruction("d"), ev)
        expected = float(1 / (fractions.Fraction("0.8") + fractions.Fraction("0.7")
                              + fractions.Fraction("0.75") + fractions.Fraction("0.66")))
        assert got == pytest.approx(expected, rel=1e-15)

    def test_degenerate_sum_returns_sentinel(self):
        ev = _FixedEvaluator(MetricBundle(0.0, 0.0, 0.0, 0.0))
        warnings = []
        got = eval_performance(Instruction("d"), ev, warn=warnings.append)
        assert got == DEGENERATE_SENTINEL
        assert warnings

    def test_prefers_validation_falls_back_to_test(self):
        ev = _FixedEvaluator(MetricBundle(1, 1, 1, 1))
        eval_performance(Instruction("d"), ev, EvalSplitPolicy("validation"))
        assert ev.calls == ["validation"]
        ev.available_splits = frozenset({"test"})
        eval_performance(Instruction("d"), ev, EvalSplitPolicy("validation"))
        assert ev.calls == ["validation", "test"]

    def test_no_usable_split(self):
        ev = _FixedEvaluator(MetricBundle(1, 1, 1, 1))
        ev.available_splits = frozenset({"train"})
        with pytest.raises(EvaluationError):
            eval_performance(Instruction("d"), ev)

    def test_monotone_in_metric_sum(self):
        worse = _FixedEvaluator(MetricBundle(0.5, 0.5, 0.5, 0.5))
        better = _FixedEvaluator(MetricBundle(0.9, 0.9, 0.9, 0.9))
        assert eval_performance(Instruction("d"), better) < eval_performance(
            Instruction("d"), worse
        )


class TestEvalLength:
    def test_definition_only(self):
        assert eval_length(Instruction("abcde")) == 5

    def test_with_separator(self):
        assert eval_length(Instruction("a" * 10, "b" * 5)) == 16

    def test_unicode_code_points(self):
        assert eval_length(Instruction("café \U0001f600")) == 6

    @given(
        st.text(min_size=1, max_size=200).filter(lambda s: s.strip()),
        st.text(max_size=200),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_independent_count(self, definition, example):
        instr = Instruction(definition, example)
        independent = sum(1 for _ in instr.render())
        assert eval_length(instr) == independent


class TestMacroPrf:
    def test_perfect_predictions(self):
        gold = ["a", "b", "a"]
        assert macro_prf(gold, gold, ["a", "b"]) == (1.0, 1.0, 1.0)

    def test_all_wrong(self):
        gold = ["a", "a"]
        pred = ["b", "b"]
        assert macro_prf(gold, pred, ["a", "b"]) == (0.0, 0.0, 0.0)


class TestKeywordOracle:
    def test_deterministic(self, oracle):
        text = "Classify the sentiment of the review."
        assert oracle.evaluate(text, "test") == oracle.evaluate(text, "test")

    def test_more_keywords_more_accuracy(self, oracle):
        few = oracle.evaluate("Classify the text.", "test")
        many = oracle.evaluate(
            "Classify the sentiment polarity of each review and label the opinion, "
            "tone and emotion as positive or negative.",
            "test",
        )
        assert many.accuracy > few.accuracy

    def test_full_coverage_is_perfect(self, oracle):
        keywords = sorted({kw for _, kw in oracle.examples})
        bundle = oracle.evaluate(" ".join(keywords), "test")
        assert bundle == MetricBundle(1.0, 1.0, 1.0, 1.0)

    def test_keyword_match_is_whole_word(self, oracle):
        # "sentimentality" must not count as the keyword "sentiment"
        with_sub = oracle.evaluate("sentimentality", "test")
        without = oracle.evaluate("nothing relevant", "test")
        assert with_sub == without


class TestObjectiveCache:
    def test_hit_skips_backends(self, oracle, scorer):
        cache = ObjectiveCache()
        instr = Instruction("Classify the sentiment.")
        first = evaluate(instr, cache, oracle, scorer)

        class Exploding:
            available_splits = frozenset({"test"})

            def evaluate(self, rendered, split):
                raise AssertionError("backend touched on cache hit")

            def perplexity(self, text):
                raise AssertionError("backend touched on cache hit")

        boom = Exploding()
        second = evaluate(instr, cache, boom, boom)
        assert second == first

    def test_equal_rendered_text_shares_slot(self):
        a = Instruction("same text")
        b = Instruction("same text")
        assert a.id != b.id
        assert cache_key(a.render()) == cache_key(b.render())

    def test_persistence_round_trip(self, tmp_path, oracle, scorer):
        path = tmp_path / "cache.jsonl"
        cache = ObjectiveCache(path)
        instr = Instruction("Classify the sentiment of the review.")
        vector = evaluate(instr, cache, oracle, scorer)
        reloaded = ObjectiveCache(path)
        assert reloaded.get(instr.render()) == vector

    def test_pure_memoization(self, oracle, scorer):
        instr = Instruction("Label the polarity.", "Ex: fine -> positive")
        with_cache = evaluate(instr, ObjectiveCache(), oracle, scorer)
        without_cache = evaluate(instr, None, oracle, scorer)
        assert with_cache == without_cache


class TestEvaluate:
    def test_components_assembled(self, oracle, scorer):
        instr = Instruction("Classify the sentiment of each review.")
        vector = evaluate(instr, None, oracle, scorer)
        assert vector.length == eval_length(instr)
        assert vector.perplexity == eval_perplexity(instr, scorer)
        assert vector.performance == eval_performance(instr, oracle)

    def test_all_components_finite(self, oracle, scorer):
        rng = random.Random(0)
        words = "classify review tone xyzzy blue apple".split()
        for _ in range(20):
            instr = Instruction(" ".join(rng.choices(words, k=5)))
            vector = evaluate(instr, None, oracle, scorer)
            assert all(x == x and abs(x) != float("inf") for x in vector.as_tuple())
