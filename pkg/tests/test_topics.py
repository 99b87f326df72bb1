"""LDA training, topic-mixture inference and the topic-model unigram LM."""

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbrank.errors import EmptyCorpus
from nbrank.synth import match_topics, sample_lda_corpus
from nbrank.topics import (
    _make_model,
    default_alpha,
    infer_theta,
    load_topic_model,
    save_topic_model,
    tm_lm_logprob,
    train_lda,
    word_probs,
)


@pytest.fixture(scope="module")
def three_topics():
    docs, phi_true, words = sample_lda_corpus(n_docs=300, n_topics=3, doc_len=50, seed=11)
    model = train_lda(docs, K=3, iters=300, seed=11)
    # words the sample never produced get zero learned probability
    learned = np.zeros_like(phi_true)
    for j, w in enumerate(words):
        if w in model.vocab:
            learned[:, j] = model.phi[:, model.vocab[w]]
    matching = match_topics(learned, phi_true)
    return docs, phi_true, words, model, matching


class TestTraining:
    def test_single_topic_is_smoothed_unigram(self):
        corpus = [["a", "b", "a"], ["c", "a"], ["b"]]
        m = train_lda(corpus, K=1, iters=5, seed=0, beta=0.01)
        counts = Counter(w for d in corpus for w in d)
        total, W = sum(counts.values()), len(counts)
        for w, col in m.vocab.items():
            assert m.phi[0, col] == pytest.approx((counts[w] + 0.01) / (total + W * 0.01), rel=1e-12)

    def test_default_alpha(self):
        assert default_alpha(50) == 1.0
        assert train_lda([["a", "b"]], K=4, iters=1).alpha == 12.5

    def test_rows_sum_to_one(self, three_topics):
        np.testing.assert_allclose(three_topics[3].phi.sum(axis=1), 1.0, atol=1e-9)

    def test_recovers_known_topics(self, three_topics):
        *_, matching = three_topics
        assert sorted(matching) == [0, 1, 2]
        assert max(tv for _, tv in matching.values()) < 0.2

    def test_reproducible(self):
        docs, _, _ = sample_lda_corpus(n_docs=40, seed=3)
        a = train_lda(docs, K=3, iters=20, seed=5)
        b = train_lda(docs, K=3, iters=20, seed=5)
        c = train_lda(docs, K=3, iters=20, seed=6)
        assert np.array_equal(a.phi, b.phi)
        assert not np.array_equal(a.phi, c.phi)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            train_lda([[], []], K=2)


class TestInference:
    def test_single_topic(self, three_topics):
        m = train_lda(three_topics[0][:20], K=1, iters=2)
        assert infer_theta(m, ["t0w00", "t1w01"]).tolist() == [1.0]

    def test_empty_and_oov_docs_are_uniform(self, three_topics):
        m = three_topics[3]
        np.testing.assert_array_equal(infer_theta(m, []), np.full(3, 1 / 3))
        np.testing.assert_array_equal(infer_theta(m, ["never", "seen"]), np.full(3, 1 / 3))

    def test_exclusive_words_pick_their_topic(self, three_topics):
        _, phi_true, words, model, matching = three_topics
        exclusive = [w for j, w in enumerate(words) if phi_true[2, j] > 0][:10]
        theta = infer_theta(model, exclusive * 2, iters=100, seed=0)
        assert int(np.argmax(theta)) == matching[2][0]
        assert theta.sum() == pytest.approx(1.0, abs=1e-12)

    def test_same_seed_same_theta(self, three_topics):
        m, doc = three_topics[3], three_topics[0][0]
        assert np.array_equal(infer_theta(m, doc, seed=4), infer_theta(m, doc, seed=4))


class TestUnigramLM:
    def test_single_topic_equals_phi(self, three_topics):
        m = train_lda(three_topics[0][:20], K=1, iters=2)
        np.testing.assert_array_equal(word_probs(m, [1.0]), m.phi[0])

    def test_mixture_arithmetic(self):
        phi = np.array([[0.2, 0.8], [0.4, 0.6]])
        m = _make_model(phi, 1.0, 0.01, ["x", "y"])
        np.testing.assert_allclose(word_probs(m, [0.5, 0.5]), [0.3, 0.7], rtol=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 300))
    def test_normalized_for_any_mixture(self, seed, K, W):
        rng = np.random.default_rng(seed)
        m = _make_model(rng.dirichlet(np.full(W, 0.1), size=K), 1.0, 0.01, [f"w{i}" for i in range(W)])
        theta = rng.dirichlet(np.full(K, 0.5))
        assert abs(word_probs(m, theta).sum() - 1.0) <= 1e-9

    def test_topic_lm_beats_single_topic_on_held_out(self, three_topics):
        docs, _, _, model, _ = three_topics
        held, _, _ = sample_lda_corpus(n_docs=30, n_topics=3, doc_len=50, seed=99)
        flat = train_lda(docs, K=1, iters=2)

        def ppl(m):
            scores = [tm_lm_logprob(m, infer_theta(m, d, seed=1), d) for d in held]
            return np.exp(-sum(s.logprob for s in scores) / sum(s.n_scored for s in scores))

        assert ppl(model) < ppl(flat)

    def test_oov_words_are_counted_not_scored(self, three_topics):
        m = three_topics[3]
        s = tm_lm_logprob(m, np.full(3, 1 / 3), ["t0w00", "unknown"])
        assert (s.n_scored, s.n_oov) == (1, 1)


class TestPersistence:
    def test_round_trip(self, tmp_path, three_topics):
        m = three_topics[3]
        save_topic_model(m, tmp_path / "lda.txt", seed=11)
        back = load_topic_model(tmp_path / "lda.txt")
        np.testing.assert_allclose(back.phi, m.phi, rtol=1e-12, atol=0)
        assert back.words() == m.words() and back.alpha == m.alpha and back.beta == m.beta
        assert "seed=11" in (tmp_path / "lda.txt").read_text().splitlines()[1]
