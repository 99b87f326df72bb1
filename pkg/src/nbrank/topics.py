"""Latent Dirichlet allocation by collapsed Gibbs sampling.

Training estimates the topic-word matrix from the final sampler state,
``phi[k, w] = (n_kw + beta) / (n_k + W * beta)``. Held-out documents get a
topic mixture by Gibbs sampling their assignments with ``phi`` held fixed.
All randomness comes from ``numpy.random.default_rng(seed)``; the uniforms are
drawn in Python and handed to the kernels, so both kernel backends consume
exactly the same random stream.
"""

import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from . import kernels
from ._jsonio import atomic_write, fmt_float
from .errors import EmptyCorpus, ParseError

DEFAULT_K = 50
DEFAULT_BETA = 0.01
DEFAULT_INFER_ITERS = 100
FORMAT_TAG = "nbrank-topicmodel 1"


def default_alpha(n_topics):
    return 50.0 / n_topics


@dataclass(frozen=True, eq=False)
class TopicModel:
    phi: np.ndarray  # (K, W)
    alpha: float
    beta: float
    vocab: MappingProxyType  # word -> column

    @property
    def K(self):
        return self.phi.shape[0]

    @property
    def W(self):
        return self.phi.shape[1]

    def words(self):
        return sorted(self.vocab, key=self.vocab.__getitem__)

    def encode(self, doc):
        """Column ids for in-vocabulary words of ``doc``, plus the OOV count."""
        ids = [self.vocab[w] for w in doc if w in self.vocab]
        return np.array(ids, dtype=np.intc), len(doc) - len(ids)


@dataclass(frozen=True)
class TmLmScore:
    logprob: float  # natural log, summed over scored words
    n_scored: int
    n_oov: int

    @property
    def perplexity(self):
        if self.n_scored == 0:
            return 1.0
        return math.exp(-self.logprob / self.n_scored)

    @property
    def log_perplexity(self):
        return -self.logprob / self.n_scored if self.n_scored else 0.0


def _make_model(phi, alpha, beta, words):
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    phi.setflags(write=False)
    return TopicModel(phi, float(alpha), float(beta), MappingProxyType({w: i for i, w in enumerate(words)}))


def train_lda(corpus, K=DEFAULT_K, iters=1000, seed=0, alpha=None, beta=DEFAULT_BETA):
    docs = [list(d) for d in corpus]
    if not docs or not any(docs):
        raise EmptyCorpus("cannot train a topic model on an empty corpus")
    if K < 1 or iters < 1:
        raise ValueError("K and iters must be >= 1")
    alpha = default_alpha(K) if alpha is None else float(alpha)

    words = sorted({w for d in docs for w in d})
    col = {w: i for i, w in enumerate(words)}
    word_ids = np.array([col[w] for d in docs for w in d], dtype=np.intc)
    doc_ids = np.array([i for i, d in enumerate(docs) for _ in d], dtype=np.intc)
    n_tokens = word_ids.shape[0]

    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=n_tokens).astype(np.intc)
    ndk = np.zeros((len(docs), K), dtype=np.intc)
    nkw = np.zeros((K, len(words)), dtype=np.intc)
    np.add.at(ndk, (doc_ids, z), 1)
    np.add.at(nkw, (z, word_ids), 1)
    nk = nkw.sum(axis=1).astype(np.intc)

    for _ in range(iters):
        u = rng.random(n_tokens)
        kernels.lda_sweep(word_ids, doc_ids, z, ndk, nkw, nk, alpha, beta, u)

    phi = (nkw + beta) / (nk[:, None] + len(words) * beta)
    return _make_model(phi, alpha, beta, words)


def infer_theta(model, doc, iters=DEFAULT_INFER_ITERS, seed=0):
    """Topic mixture of ``doc``, averaged over the last quarter of the sweeps.

    Empty or fully out-of-vocabulary documents get the uniform mixture.
    """
    ids, _ = model.encode(doc)
    K = model.K
    if ids.shape[0] == 0 or K == 1:
        return np.full(K, 1.0 / K)
    iters = max(1, int(iters))
    window = max(1, iters // 4)
    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=ids.shape[0]).astype(np.intc)
    u = rng.random((iters, ids.shape[0]))
    theta = kernels.infer_doc(ids, _phi_t(model), z, model.alpha, u, window)
    return theta / theta.sum()


def _phi_t(model):
    # transposed copy cached on the (frozen) instance
    cached = model.__dict__.get("_phi_t")
    if cached is None:
        cached = np.ascontiguousarray(model.phi.T)
        object.__setattr__(model, "_phi_t", cached)
    return cached


def word_probs(model, theta):
    """The document-specific unigram distribution ``sum_k theta_k * phi[k, :]``."""
    return np.asarray(theta, dtype=np.float64) @ model.phi


def tm_lm_logprob(model, theta, doc):
    probs = word_probs(model, theta)
    ids, n_oov = model.encode(doc)
    logprob = float(np.log(probs[ids]).sum()) if ids.shape[0] else 0.0
    return TmLmScore(logprob, int(ids.shape[0]), n_oov)


# ---------------------------------------------------------------------------
# persistence


def save_topic_model(model, path, seed=None):
    with atomic_write(path) as fh:
        fh.write(FORMAT_TAG + "\n")
        fh.write(f"K={model.K} W={model.W} alpha={fmt_float(model.alpha)} beta={fmt_float(model.beta)}")
        fh.write(f" seed={seed}\n" if seed is not None else "\n")
        for w in model.words():
            fh.write(w + "\n")
        for row in model.phi:
            fh.write(" ".join(fmt_float(v) for v in row) + "\n")


def load_topic_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != FORMAT_TAG:
        raise ParseError(f"expected {FORMAT_TAG!r} header", line=1, path=path)
    try:
        fields = dict(part.split("=", 1) for part in lines[1].split())
        K, W = int(fields["K"]), int(fields["W"])
        alpha, beta = float(fields["alpha"]), float(fields["beta"])
    except (IndexError, KeyError, ValueError):
        raise ParseError("malformed parameter line", line=2, path=path) from None
    if len(lines) != 2 + W + K:
        raise ParseError(f"expected {W} vocabulary lines and {K} rows", path=path)
    words = lines[2 : 2 + W]
    phi = np.empty((K, W))
    for k in range(K):
        lineno = 3 + W + k
        parts = lines[2 + W + k].split()
        if len(parts) != W:
            raise ParseError(f"expected {W} values", line=lineno, path=path)
        try:
            phi[k] = [float(p) for p in parts]
        except ValueError:
            raise ParseError("non-numeric value", line=lineno, path=path) from None
    return _make_model(phi, alpha, beta, words)
