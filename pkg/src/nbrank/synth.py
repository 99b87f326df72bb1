"""Seeded synthetic N-best corpora with known ground truth.

References come from a topic-mixture generative model: each topic owns a
disjoint word list with Zipf-like weights and a small set of preferred
successors per word, so both n-gram and topic models have structure to find.
Hypotheses are the reference corrupted by substitution, deletion and
insertion noise at a per-hypothesis rate. Decoder and external scores are noisy
monotone functions of the hypothesis WER; ``informativeness`` in [0, 1] sets
how much of each score is signal.

The decoder signal is split between ``am_score`` and ``lm_score`` with
anti-correlated noise, so their sum carries the decoder's full information and
the decoder (AM + LM) order is the best ranking those two fields allow.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._jsonio import atomic_write, dumps
from .align import align
from .features import FeatureBlock, FeatureSchema, save_schema
from .nbest import Hypothesis, NBestList, write_nbest

SPLITS = ("train", "dev", "test")
EXT_SCALARS = ("rnnlm-ppl", "bertlm-ppl")
EXT_VECTOR = "bert-emb"


def _default_informativeness():
    return {"decoder": 0.35, "rnnlm-ppl": 0.35, "bertlm-ppl": 0.3, "bert-emb": 0.4}


@dataclass(frozen=True)
class SynthConfig:
    n_train: int = 300
    n_dev: int = 100
    n_test: int = 100
    nbest: int = 20
    n_topics: int = 5
    words_per_topic: int = 40
    n_function_words: int = 12
    min_len: int = 6
    max_len: int = 16
    doc_alpha: float = 0.3
    lm_sentences: int = 2000
    noise_rate: float = 0.15
    sub_share: float = 0.6
    del_share: float = 0.2
    emb_dim: int = 16
    noise_scale: float = 0.1
    informativeness: dict = field(default_factory=_default_informativeness)

    def __post_init__(self):
        # a partial mapping overrides only the blocks it names
        merged = {**_default_informativeness(), **self.informativeness}
        unknown = set(merged) - set(_default_informativeness())
        if unknown:
            raise ValueError(f"unknown informativeness keys {sorted(unknown)}")
        object.__setattr__(self, "informativeness", merged)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class SynthCorpus:
    config: SynthConfig
    seed: int
    splits: dict  # split -> list[NBestList]
    lm_corpus: list  # token lists for LM / topic-model training
    truth: dict


class _Language:
    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.topic_words = [[f"t{k}w{i:02d}" for i in range(cfg.words_per_topic)] for k in range(cfg.n_topics)]
        self.function_words = [f"fw{i:02d}" for i in range(cfg.n_function_words)]
        self.all_words = [w for ws in self.topic_words for w in ws] + self.function_words
        ranks = np.arange(1, cfg.words_per_topic + 1)
        self.phi = []
        for _ in range(cfg.n_topics):
            weights = 1.0 / ranks ** 1.1
            weights = weights[rng.permutation(cfg.words_per_topic)]
            self.phi.append(weights / weights.sum())
        # fixed embedding-space direction along which hypothesis quality varies
        direction = rng.standard_normal(cfg.emb_dim)
        self.quality_direction = direction / np.linalg.norm(direction)
        self.successors = [
            [rng.choice(cfg.words_per_topic, size=3, replace=False) for _ in range(cfg.words_per_topic)]
            for _ in range(cfg.n_topics)
        ]

    def sentence(self, rng, theta):
        cfg = self.cfg
        length = int(rng.integers(cfg.min_len, cfg.max_len + 1))
        out, prev = [], None  # prev = (topic, index)
        while len(out) < length:
            if self.function_words and rng.random() < 0.2:
                out.append(self.function_words[int(rng.integers(len(self.function_words)))])
                continue
            if prev is not None and rng.random() < 0.5:
                k = prev[0]
                i = int(self.successors[k][prev[1]][int(rng.integers(3))])
            else:
                k = int(rng.choice(cfg.n_topics, p=theta))
                i = int(rng.choice(cfg.words_per_topic, p=self.phi[k]))
            out.append(self.topic_words[k][i])
            prev = (k, i)
        return out

    def corrupt(self, rng, ref, rate):
        cfg = self.cfg
        p_del = rate * cfg.del_share
        p_sub = rate * cfg.sub_share
        p_ins = rate * max(0.0, 1.0 - cfg.sub_share - cfg.del_share)
        out = []
        for tok in ref:
            r = rng.random()
            if r < p_del:
                pass
            elif r < p_del + p_sub:
                w = tok
                while w == tok:
                    w = self.all_words[int(rng.integers(len(self.all_words)))]
                out.append(w)
            else:
                out.append(tok)
            if rng.random() < p_ins:
                out.append(self.all_words[int(rng.integers(len(self.all_words)))])
        return out


def _signal(rng, quality, info, scale):
    """``info * (-quality) + (1 - info) * scale * N(0, 1)`` per hypothesis."""
    return info * (-quality) + (1.0 - info) * scale * rng.standard_normal(quality.shape[0])


def _make_list(rng, lang, cfg, utt_id, theta):
    ref = lang.sentence(rng, theta)
    texts, seen = [], set()
    for _ in range(cfg.nbest):
        rate = cfg.noise_rate * float(rng.uniform(0.3, 1.7))
        hyp = lang.corrupt(rng, ref, rate)
        for _ in range(20):
            if tuple(hyp) not in seen or cfg.noise_rate == 0.0:
                break
            hyp = lang.corrupt(rng, ref, max(rate, cfg.noise_rate))
        seen.add(tuple(hyp))
        texts.append(hyp)

    quality = np.array([align(ref, h).wer for h in texts])
    info = cfg.informativeness
    n = len(texts)
    decoder = _signal(rng, quality, info.get("decoder", 0.0), cfg.noise_scale)
    split_noise = cfg.noise_scale * rng.standard_normal(n)
    base = -3.0 * len(ref)
    am = base * 10.0 + 60.0 * (0.7 * decoder + split_noise)
    lm = base * 2.0 + 60.0 * (0.3 * decoder - split_noise)

    scalars = {}
    for name in EXT_SCALARS:
        s = _signal(rng, quality, info.get(name, 0.0), cfg.noise_scale)
        scalars[name] = np.exp(4.5 - 4.0 * s)  # perplexity rises as quality falls

    direction = lang.quality_direction
    content = rng.standard_normal(cfg.emb_dim)  # shared by the whole list
    emb_signal = _signal(rng, quality, info.get(EXT_VECTOR, 0.0), cfg.noise_scale)
    jitter = 0.05 * cfg.noise_scale * rng.standard_normal((n, cfg.emb_dim))
    emb = content[None, :] + 5.0 * emb_signal[:, None] * direction[None, :] + jitter

    total = am + lm
    order = sorted(range(n), key=lambda j: (-total[j], j))
    rank = {j: r for r, j in enumerate(order)}
    hyps = [
        Hypothesis(
            texts[j],
            am[j],
            lm[j],
            rank[j],
            {name: float(scalars[name][j]) for name in EXT_SCALARS},
            {EXT_VECTOR: emb[j]},
        )
        for j in order
    ]
    return NBestList(utt_id, hyps, ref), quality[order]


def generate(config=SynthConfig(), seed=0):
    rng = np.random.default_rng(seed)
    lang = _Language(config, rng)
    alpha = np.full(config.n_topics, config.doc_alpha)
    splits, quality, thetas = {}, {}, {}
    counts = {"train": config.n_train, "dev": config.n_dev, "test": config.n_test}
    for split in SPLITS:
        lists = []
        for i in range(counts[split]):
            uid = f"{split}-{i:05d}"
            theta = rng.dirichlet(alpha)
            nb, q = _make_list(rng, lang, config, uid, theta)
            lists.append(nb)
            quality[uid] = q.tolist()
            thetas[uid] = theta.tolist()
        splits[split] = lists

    # text for LM / topic-model training is drawn separately from every split's
    # references, so the train split's n-gram features are not optimistically biased
    lm_corpus = []
    for _ in range(config.lm_sentences):
        lm_corpus.append(lang.sentence(rng, rng.dirichlet(alpha)))

    truth = {
        "seed": seed,
        "config": asdict(config),
        "topic_words": lang.topic_words,
        "function_words": lang.function_words,
        "phi": [p.tolist() for p in lang.phi],
        "theta": thetas,
        "wer": quality,
    }
    return SynthCorpus(config, seed, splits, lm_corpus, truth)


def default_schema(config):
    return FeatureSchema(
        [
            FeatureBlock("am", "hypothesis-field", 1, key="am_score"),
            FeatureBlock("lm", "hypothesis-field", 1, key="lm_score"),
            FeatureBlock("ngram", "builtin-ngram", 2),
            FeatureBlock("tmlm", "builtin-tmlm", 2),
            FeatureBlock("topicvec", "builtin-topicvec", config.n_topics),
            FeatureBlock("rnnlm-ppl", "ext-scalar", 1, transform="log"),
            FeatureBlock("bertlm-ppl", "ext-scalar", 1, transform="log"),
            FeatureBlock("bert-emb", "ext-vector", config.emb_dim),
        ]
    )


def write_corpus(corpus, out_dir, vector_format="text"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for split, lists in corpus.splits.items():
        write_nbest(lists, out / f"{split}.jsonl", vector_format=vector_format)
        files.append(f"{split}.jsonl")
    with atomic_write(out / "corpus.txt") as fh:
        for sent in corpus.lm_corpus:
            fh.write(" ".join(sent) + "\n")
    save_schema(default_schema(corpus.config), out / "schema.txt")
    with atomic_write(out / "truth.json") as fh:
        fh.write(dumps(corpus.truth) + "\n")
    cfg = corpus.config
    run_config = {
        "seed": corpus.seed,
        "nbest": cfg.nbest,
        "lda": {"K": cfg.n_topics},
        "order": 3,
    }
    with atomic_write(out / "config.json") as fh:
        fh.write(dumps(run_config) + "\n")
    files += ["corpus.txt", "schema.txt", "truth.json", "config.json"]
    with atomic_write(out / "manifest.json") as fh:
        fh.write(dumps({"seed": corpus.seed, "config": asdict(cfg), "files": files}) + "\n")


def sample_lda_corpus(n_docs=300, n_topics=3, words_per_topic=30, doc_len=50, doc_alpha=0.3, seed=0):
    """Documents from topics with disjoint vocabularies.

    Returns ``(docs, phi_true, words)`` where ``phi_true[k, j]`` is the
    probability of ``words[j]`` under topic ``k``.
    """
    rng = np.random.default_rng(seed)
    words = [f"t{k}w{i:02d}" for k in range(n_topics) for i in range(words_per_topic)]
    phi = np.zeros((n_topics, len(words)))
    for k in range(n_topics):
        phi[k, k * words_per_topic : (k + 1) * words_per_topic] = rng.dirichlet(np.ones(words_per_topic))
    docs = []
    for _ in range(n_docs):
        theta = rng.dirichlet(np.full(n_topics, doc_alpha))
        topics = rng.choice(n_topics, size=doc_len, p=theta)
        docs.append([words[int(rng.choice(len(words), p=phi[k]))] for k in topics])
    return docs, phi, words


def match_topics(phi_learned, phi_true):
    """Greedy one-to-one matching by total-variation distance.

    Returns ``{true_topic: (learned_topic, tv_distance)}``.
    """
    tv = 0.5 * np.abs(phi_true[:, None, :] - phi_learned[None, :, :]).sum(axis=2)
    pairs = sorted((tv[i, j], i, j) for i in range(tv.shape[0]) for j in range(tv.shape[1]))
    used_true, used_learned, out = set(), set(), {}
    for d, i, j in pairs:
        if i in used_true or j in used_learned:
            continue
        out[i] = (j, float(d))
        used_true.add(i)
        used_learned.add(j)
    return out

