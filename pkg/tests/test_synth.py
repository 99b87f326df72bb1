"""Synthetic corpus generator."""

import json

import numpy as np
import pytest

from nbrank.align import align
from nbrank.features import assemble, load_schema
from nbrank.metrics import oracle_wer, ranking_report
from nbrank.nbest import label_list, read_nbest
from nbrank.ranker import SolverConfig, baseline_order, fit_ranker, rescore
from nbrank.synth import SynthConfig, default_schema, generate, write_corpus

SMALL = dict(n_train=20, n_dev=5, n_test=5, nbest=6, lm_sentences=30, emb_dim=4)


class TestGenerator:
    def test_noise_free_lists_are_perfect(self):
        c = generate(SynthConfig(noise_rate=0.0, **SMALL), seed=1)
        for lists in c.splits.values():
            for nb in lists:
                assert nb.hypotheses[0].tokens == nb.reference
        assert oracle_wer(c.splits["test"]).wer == 0.0

    def test_structure(self):
        cfg = SynthConfig(**SMALL)
        c = generate(cfg, seed=2)
        assert [len(c.splits[s]) for s in ("train", "dev", "test")] == [20, 5, 5]
        ids = [nb.utt_id for s in c.splits.values() for nb in s]
        assert len(set(ids)) == len(ids)
        for nb in c.splits["train"]:
            assert len(nb) == 6
            assert [h.asr_rank for h in nb.hypotheses] == list(range(6))
            totals = [h.am_score + h.lm_score for h in nb.hypotheses]
            assert totals == sorted(totals, reverse=True)
            for h in nb.hypotheses:
                assert set(h.ext_scalars) == {"rnnlm-ppl", "bertlm-ppl"}
                assert h.ext_vectors["bert-emb"].shape == (4,)
        # ground truth WERs agree with alignment
        nb = c.splits["dev"][0]
        assert c.truth["wer"][nb.utt_id] == [align(nb.reference, h.tokens).wer for h in nb.hypotheses]

    def test_same_seed_same_corpus(self, tmp_path):
        for run in ("a", "b"):
            write_corpus(generate(SynthConfig(**SMALL), seed=3), tmp_path / run)
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name
        write_corpus(generate(SynthConfig(**SMALL), seed=4), tmp_path / "c")
        assert (tmp_path / "a" / "train.jsonl").read_bytes() != (tmp_path / "c" / "train.jsonl").read_bytes()

    @pytest.mark.parametrize("fmt", ["text", "f32le"])
    def test_written_corpus_reads_back(self, tmp_path, fmt):
        cfg = SynthConfig(**SMALL)
        c = generate(cfg, seed=5)
        write_corpus(c, tmp_path, vector_format=fmt)
        assert read_nbest(tmp_path / "test.jsonl") == c.splits["test"]
        assert load_schema(tmp_path / "schema.txt") == default_schema(cfg)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == 5 and "train.jsonl" in manifest["files"]
        assert json.loads((tmp_path / "config.json").read_text())["lda"]["K"] == cfg.n_topics


def _ext_only_experiment(informativeness, seed=0):
    cfg = SynthConfig(n_train=150, n_dev=0, n_test=150, lm_sentences=10, informativeness=informativeness)
    c = generate(cfg, seed)
    schema, _ = default_schema(cfg).select(["am", "lm", "rnnlm-ppl", "bertlm-ppl", "bert-emb"])

    def prep(split):
        return [label_list(nb) for nb in c.splits[split]], [assemble(nb, schema) for nb in c.splits[split]]

    train, (labs, mats) = prep("train"), prep("test")
    model = fit_ranker(*train, config=SolverConfig(seed=seed))
    learned = ranking_report(labs, [rescore(model, lab.list, m) for lab, m in zip(labs, mats)])
    base = ranking_report(labs, [baseline_order(lab.list) for lab in labs])
    diff = np.array([learned.per_utterance[u] - base.per_utterance[u] for u in base.per_utterance])
    return diff.mean(), diff.std(ddof=1) / np.sqrt(diff.shape[0])


class TestNullFeatures:
    def test_uninformative_features_do_not_beat_decoder_order(self):
        mean, se = _ext_only_experiment({"rnnlm-ppl": 0.0, "bertlm-ppl": 0.0, "bert-emb": 0.0})
        assert abs(mean) < 3 * se

    def test_informative_features_do(self):
        mean, se = _ext_only_experiment({})
        assert mean > 3 * se
