"""Shared test data: the 2-d toy ranking problem and small N-best builders."""

import numpy as np

from nbrank.features import FeatureMatrix
from nbrank.nbest import Hypothesis, NBestList, label_list
from nbrank.ranker import PairSet

# six hand-built difference vectors; the optimum has active and inactive pairs
TOY_DIFFS = np.array(
    [[1.0, 0.5], [0.8, -0.2], [0.3, 1.0], [-0.2, 0.6], [1.2, 0.1], [0.1, -0.4]]
)


def pairset_from_diffs(diffs, schema_id="toy"):
    """A PairSet whose pair ``i`` is row ``i`` minus an all-zero row."""
    diffs = np.asarray(diffs, dtype=np.float64)
    n, dim = diffs.shape
    X = np.vstack([diffs, np.zeros((1, dim))])
    first = np.arange(n, dtype=np.intp)
    second = np.full(n, n, dtype=np.intp)
    return PairSet(X, first, second, np.zeros(n, dtype=np.intp), schema_id)


def toy_pairs():
    return pairset_from_diffs(TOY_DIFFS)


def separable_lists(n_lists, n_hyps, seed, noise_dims=2):
    """Lists whose first feature is ``-WER`` (a strictly monotone function of quality).

    Returns ``(labeled_lists, matrices)``. The other columns are noise.
    """
    rng = np.random.default_rng(seed)
    vocab = [f"w{i}" for i in range(30)]
    labeled, mats = [], []
    for li in range(n_lists):
        ref = [vocab[i] for i in rng.integers(0, 30, size=rng.integers(5, 12))]
        hyps, rows = [], []
        for j in range(n_hyps):
            hyp = [t if rng.random() > 0.3 * rng.random() else vocab[int(rng.integers(30))] for t in ref]
            hyps.append(Hypothesis(hyp, -float(j), 0.0, j))
        nb = NBestList(f"l{li:04d}", hyps, ref)
        lab = label_list(nb)
        wer = np.array([s.wer for s in lab.stats])
        rows = np.column_stack([-wer, rng.standard_normal((n_hyps, noise_dims))])
        labeled.append(lab)
        mats.append(FeatureMatrix(nb.utt_id, "sep", rows))
    return labeled, mats
