"""Word alignment, edit counts and WER."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbrank.align import EditStats, align, normalize_token
from oracles import edit_counts_recursive, levenshtein

tokens = st.lists(st.sampled_from("abcde"), max_size=12)


class TestExamples:
    def test_identity(self):
        s = align("a b c".split(), "a b c".split())
        assert (s.substitutions, s.insertions, s.deletions, s.ref_len) == (0, 0, 0, 3)
        assert s.wer == 0.0

    def test_single_substitution(self):
        s = align("a b c".split(), "a x c".split())
        assert (s.substitutions, s.insertions, s.deletions) == (1, 0, 0)
        assert s.wer == pytest.approx(1 / 3)

    def test_full_deletion(self):
        s = align(["a", "b"], [])
        assert (s.substitutions, s.insertions, s.deletions) == (0, 0, 2)
        assert s.wer == 1.0

    def test_empty_reference_counts_insertions(self):
        assert align([], ["x", "y"]).wer == 2.0
        assert align([], []).wer == 0.0

    def test_normalization_is_case_and_space_only(self):
        assert normalize_token("  Hello ") == "hello"
        assert align(["Hello", "World"], ["hello", " world"]).errors == 0
        assert align(["don't"], ["dont"]).errors == 1

    def test_tie_break_prefers_substitution(self):
        # "a b" -> "b c": two substitutions, or one deletion plus one insertion
        s = align(["a", "b"], ["b", "c"])
        assert (s.substitutions, s.insertions, s.deletions) == (2, 0, 0)

    def test_stats_add(self):
        total = align(["a"], ["b"]) + align(["a", "b"], ["a"])
        assert total == EditStats(1, 0, 1, 3)


class TestAgainstOracle:
    def test_random_pairs_match_recursive_oracle(self):
        rng = np.random.default_rng(7)
        alphabet = list("abcde")
        for _ in range(300):
            ref = [alphabet[i] for i in rng.integers(0, 5, size=rng.integers(0, 13))]
            hyp = [alphabet[i] for i in rng.integers(0, 5, size=rng.integers(0, 13))]
            s = align(ref, hyp)
            assert (s.substitutions, s.insertions, s.deletions) == edit_counts_recursive(ref, hyp)
            assert s.errors == levenshtein(ref, hyp)


class TestProperties:
    @given(tokens, tokens)
    def test_counts_consistent(self, ref, hyp):
        s = align(ref, hyp)
        assert s.ref_len == len(ref)
        assert s.substitutions + s.deletions <= len(ref)
        hits = len(ref) - s.substitutions - s.deletions
        assert hits + s.substitutions + s.insertions == len(hyp)
        assert (s.wer == 0) == (ref == hyp)

    @given(tokens, tokens)
    def test_swap_exchanges_insertions_and_deletions(self, ref, hyp):
        a, b = align(ref, hyp), align(hyp, ref)
        assert a.errors == b.errors
        # the optimal cost is symmetric; I - D is fixed by the length difference
        assert a.insertions - a.deletions == b.deletions - b.insertions == len(hyp) - len(ref)

    @settings(max_examples=200)
    @given(tokens, tokens, tokens)
    def test_triangle_inequality(self, x, y, z):
        assert align(x, z).errors <= align(x, y).errors + align(y, z).errors
