"""Scoring primitives: normalization, F1, perplexity, entropy, bootstrap."""

import math
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tempoprobe.metrics import (
    SpanScore,
    bootstrap_ci,
    entropy,
    max_f1,
    mlm_perplexity,
    normalize_text,
    target_length,
    token_f1,
)

words = st.text(alphabet="abcdef AB.,!'", max_size=20)


class TestNormalizeText:
    def test_article_and_punctuation(self):
        assert normalize_text("The Lakers!") == "lakers"

    def test_empty(self):
        assert normalize_text("") == ""

    def test_dotted_abbreviation(self):
        assert normalize_text("Liverpool F.C.") == "liverpool fc"

    def test_article_inside_word_kept(self):
        # 'the' must match as a whole word only
        assert normalize_text("Theater") == "theater"

    def test_whitespace_collapsed(self):
        assert normalize_text("a  big   gap") == "big gap"


class TestTokenF1:
    def test_partial_overlap_two_thirds(self):
        assert token_f1("Liverpool F.C.", "Liverpool") == pytest.approx(2 / 3)

    def test_identical(self):
        assert token_f1("Real Madrid", "Real Madrid") == 1.0

    def test_disjoint(self):
        assert token_f1("Arsenal", "Chelsea") == 0.0

    def test_both_empty_scores_one(self):
        assert token_f1("", "") == 1.0
        assert token_f1("the", "a") == 1.0  # both normalize to nothing

    def test_one_empty_scores_zero(self):
        assert token_f1("", "Chelsea") == 0.0
        assert token_f1("Chelsea", "") == 0.0

    def test_duplicate_tokens_use_bag_semantics(self):
        # pred {b, b} vs gold {b}: overlap 1, P=1/2, R=1
        assert token_f1("b b", "b") == pytest.approx(2 / 3)

    @given(words, words)
    def test_symmetric(self, a, b):
        assert token_f1(a, b) == pytest.approx(token_f1(b, a))

    @given(words, words)
    def test_bounded(self, a, b):
        assert 0.0 <= token_f1(a, b) <= 1.0

    @given(words, words)
    def test_one_iff_equal_bags(self, a, b):
        score = token_f1(a, b)
        same_bags = Counter(normalize_text(a).split()) == Counter(normalize_text(b).split())
        assert (score == 1.0) == same_bags


class TestMaxF1:
    def test_exact_match_on_second_gold(self):
        assert max_f1("Chelsea", ["Arsenal", "Chelsea"]) == 1.0

    def test_partial_against_both(self):
        # two single-token golds, prediction contains both: P=1/2, R=1 each
        assert max_f1("X Y", ["X", "Y"]) == pytest.approx(2 / 3)

    def test_single_gold_reduces_to_token_f1(self):
        assert max_f1("Liverpool F.C.", ["Liverpool"]) == token_f1("Liverpool F.C.", "Liverpool")

    def test_empty_golds_error(self):
        with pytest.raises(ValueError):
            max_f1("x", [])

    @given(words, st.lists(words, min_size=1, max_size=4), words)
    def test_monotone_in_golds(self, pred, golds, extra):
        assert max_f1(pred, golds + [extra]) >= max_f1(pred, golds)


class TestMlmPerplexity:
    def test_certainty_gives_one(self):
        assert mlm_perplexity([SpanScore(0.0, 3), SpanScore(0.0, 1)]) == 1.0

    def test_single_span_closed_form(self):
        assert mlm_perplexity([SpanScore(math.log(1 / 100), 1)]) == pytest.approx(100.0)

    def test_two_span_closed_form(self):
        scores = [SpanScore(-2.0, 2), SpanScore(-4.0, 1)]
        assert mlm_perplexity(scores) == pytest.approx(math.exp(2.0))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mlm_perplexity([])

    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            mlm_perplexity([SpanScore(-1.0, 0)])

    @given(st.lists(st.tuples(st.floats(-20, 0), st.integers(1, 5)), min_size=1, max_size=8))
    def test_adding_certain_span_never_increases(self, raw):
        scores = [SpanScore(lp, ln) for lp, ln in raw]
        before = mlm_perplexity(scores)
        after = mlm_perplexity(scores + [SpanScore(0.0, 2)])
        if before > 1.0:
            assert after < before
        else:
            assert after == pytest.approx(1.0)


class TestTargetLength:
    def test_multiword(self):
        assert target_length("Real Madrid") == 2

    def test_empty_floors_at_one(self):
        assert target_length("") == 1


class TestEntropy:
    def test_uniform_249(self):
        assert entropy([1.0] * 249) == pytest.approx(math.log(249), abs=1e-12)

    def test_point_mass(self):
        assert entropy([0.0, 1.0, 0.0]) == 0.0

    def test_unnormalized_weights_ok(self):
        assert entropy([2.0, 2.0]) == pytest.approx(math.log(2))

    def test_no_mass_rejected(self):
        with pytest.raises(ValueError):
            entropy([0.0, 0.0])

    @given(st.lists(st.floats(0, 10), min_size=1, max_size=30).filter(lambda w: sum(w) > 0))
    def test_bounds(self, weights):
        h = entropy(weights)
        assert -1e-12 <= h <= math.log(len(weights)) + 1e-9

    @given(
        st.lists(st.floats(0.01, 10), min_size=2, max_size=20),
        st.randoms(use_true_random=False),
    )
    def test_permutation_invariant(self, weights, rng):
        shuffled = list(weights)
        rng.shuffle(shuffled)
        assert entropy(shuffled) == pytest.approx(entropy(weights))


class TestBootstrapCi:
    def test_deterministic(self):
        values = [0.1, 0.5, 0.9, 0.3]
        assert bootstrap_ci(values, seed=7) == bootstrap_ci(values, seed=7)

    def test_single_value_degenerate(self):
        assert bootstrap_ci([0.4]) == (0.4, 0.4)

    def test_contains_plausible_mean(self):
        values = [0.5] * 50
        lo, hi = bootstrap_ci(values)
        assert lo == pytest.approx(0.5) and hi == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            bootstrap_ci([])

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=40))
    def test_interval_ordered_and_within_range(self, values):
        lo, hi = bootstrap_ci(values, n_resamples=200)
        assert lo <= hi
        assert min(values) - 1e-9 <= lo and hi <= max(values) + 1e-9
