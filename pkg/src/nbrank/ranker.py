"""Linear pairwise ranking SVM and N-best rescoring.

Training minimizes ``0.5 * ||w||^2 + C * sum_i max(0, 1 - <w, x_a(i) - x_b(i)>)``
over ordered pairs ``(a, b)`` of hypotheses from the same list where ``a`` has
the higher relevance grade. The solver is dual coordinate descent: each pair
owns one dual variable in ``[0, C]`` and ``w = sum_i alpha_i (x_a(i) - x_b(i))``.
There is no bias term; it would cancel in every difference.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._jsonio import atomic_write, dumps
from .errors import Misalignment, NoPairs, NonFiniteFeature, ParseError, SchemaMismatch
from .features import FeatureVector, Normalizer, fit_normalizer, parse_schema

DEFAULT_C = 10.0
MODES = ("f-only", "additive")
MODEL_TAG = "nbrank-rankmodel 1"


@dataclass(frozen=True)
class SolverConfig:
    max_epochs: int = 200
    tolerance: float = 1e-4
    seed: int = 0
    max_pairs_per_list: int | None = None


@dataclass(frozen=True, eq=False)
class PairSet:
    """Ordered preference pairs as row indices into a stacked feature matrix."""

    X: np.ndarray  # (hypotheses, dim), normalized if ``normalizer`` is set
    first: np.ndarray  # higher-grade row per pair
    second: np.ndarray  # lower-grade row per pair
    list_index: np.ndarray  # source list per pair
    schema_id: str
    normalizer: Normalizer | None = None

    def __len__(self):
        return self.first.shape[0]

    @property
    def diffs(self):
        return self.X[self.first] - self.X[self.second]


def build_pairs(labeled_lists, matrices, normalizer=None, max_pairs_per_list=None, seed=0):
    """Enumerate every within-list pair whose grades differ.

    Pairs come in list order, then lexicographically by (higher-grade index,
    lower-grade index). With ``max_pairs_per_list`` a seeded subset of each
    list's pairs is kept, still in that order.
    """
    labeled_lists, matrices = list(labeled_lists), list(matrices)
    if len(labeled_lists) != len(matrices):
        raise Misalignment("<dataset>", f"{len(labeled_lists)} labeled lists but {len(matrices)} feature matrices")
    schema_ids = {m.schema_id for m in matrices}
    if len(schema_ids) > 1:
        raise SchemaMismatch("feature matrices come from different schemas")
    schema_id = schema_ids.pop() if schema_ids else (normalizer.schema_id if normalizer else "")
    if normalizer is not None and normalizer.schema_id != schema_id:
        raise SchemaMismatch(f"normalizer fit on schema {normalizer.schema_id}, features use {schema_id}")

    rng = np.random.default_rng(seed)
    firsts, seconds, owners, blocks = [], [], [], []
    offset = 0
    for li, (lab, mat) in enumerate(zip(labeled_lists, matrices)):
        if len(lab.labels) != len(mat) or lab.utt_id != mat.utt_id:
            raise Misalignment(lab.utt_id)
        g = np.asarray(lab.labels)
        a, b = np.nonzero(g[:, None] > g[None, :])
        if max_pairs_per_list is not None and a.shape[0] > max_pairs_per_list:
            keep = np.sort(rng.choice(a.shape[0], size=max_pairs_per_list, replace=False))
            a, b = a[keep], b[keep]
        firsts.append(a + offset)
        seconds.append(b + offset)
        owners.append(np.full(a.shape[0], li))
        blocks.append(mat.values)
        offset += len(mat)

    dim = blocks[0].shape[1] if blocks else 0
    X = np.vstack(blocks) if blocks else np.empty((0, dim))
    if normalizer is not None:
        X = normalizer.transform(X)
    cat = lambda parts: np.concatenate(parts).astype(np.intp) if parts else np.empty(0, dtype=np.intp)  # noqa: E731
    return PairSet(np.ascontiguousarray(X, dtype=np.float64), cat(firsts), cat(seconds), cat(owners), schema_id, normalizer)


def primal_terms(w, pairs, C):
    """``(objective, slack sum, violated pairs)`` for weights ``w``."""
    s = pairs.X @ w
    margins = s[pairs.first] - s[pairs.second]
    slack = np.maximum(0.0, 1.0 - margins)
    slack_sum = float(slack.sum())
    return 0.5 * float(w @ w) + C * slack_sum, slack_sum, int((margins <= 0).sum())


@dataclass(frozen=True, eq=False)
class SolverResult:
    w: np.ndarray  # primal iterate returned as the model
    w_dual: np.ndarray  # sum_i alpha_i * diff_i
    alpha: np.ndarray
    history: list  # primal objective of ``w``: start, then after each epoch
    raw_history: list  # primal objective of ``w_dual`` per epoch
    dual_history: list  # dual objective per epoch
    epochs: int
    max_violation: float
    converged: bool


def _pair_sq_norms(pairs, chunk=65536):
    out = np.empty(len(pairs))
    for start in range(0, len(pairs), chunk):
        sl = slice(start, start + chunk)
        d = pairs.X[pairs.first[sl]] - pairs.X[pairs.second[sl]]
        out[sl] = np.einsum("ij,ij->i", d, d)
    return out


def _segment_step(w0, dw, pairs, C):
    """argmin over t in [0, 1] of the primal at ``w0 + t * dw`` (convex in t)."""
    s0, ds = pairs.X @ w0, pairs.X @ dw
    m0 = s0[pairs.first] - s0[pairs.second]
    dm = ds[pairs.first] - ds[pairs.second]
    base, curv = float(w0 @ dw), float(dw @ dw)

    def slope(t):
        active = 1.0 - m0 - t * dm > 0.0
        return base + t * curv - C * float(dm[active].sum())

    if slope(1.0) <= 0.0:
        return 1.0
    if slope(0.0) >= 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return lo


def solve_dual_cd(pairs, C=DEFAULT_C, config=SolverConfig(), on_epoch=None):
    """Dual coordinate descent with a primal line-search safeguard.

    The dual variables follow plain coordinate descent. The dual-induced
    weights ``w_dual`` can raise the primal objective between epochs, so the
    returned iterate ``w`` moves from its previous value toward ``w_dual`` only
    as far as the primal keeps falling. Its objective never increases and, since
    it is never worse than ``w_dual``, it converges with the dual.
    """
    if len(pairs) == 0:
        raise NoPairs("no preference pairs: every list is fully tied")
    if not C > 0:
        raise ValueError("C must be positive")
    if not np.isfinite(pairs.X).all():
        raise NonFiniteFeature("non-finite value in training features")

    qdiag = _pair_sq_norms(pairs)
    alpha = np.zeros(len(pairs))
    # a zero difference vector cannot be separated; its dual optimum is C
    alpha[qdiag <= 0.0] = C
    dim = pairs.X.shape[1]
    w_dual = np.zeros(dim)
    w = np.zeros(dim)
    rng = np.random.default_rng(config.seed)
    current = primal_terms(w, pairs, C)[0]
    history, raw_history, dual_history = [current], [], []
    viol, epochs, converged = np.inf, 0, False
    for epoch in range(config.max_epochs):
        order = rng.permutation(len(pairs)).astype(np.intp)
        viol = kernels.dcd_epoch(pairs.X, pairs.first, pairs.second, qdiag, alpha, w_dual, float(C), order)
        epochs = epoch + 1
        raw = primal_terms(w_dual, pairs, C)[0]
        raw_history.append(raw)
        dual_history.append(0.5 * float(w_dual @ w_dual) - float(alpha.sum()))
        if raw <= current:
            w, current = w_dual.copy(), raw
        else:
            t = _segment_step(w, w_dual - w, pairs, C)
            candidate = w + t * (w_dual - w)
            value = primal_terms(candidate, pairs, C)[0]
            if value <= current:
                w, current = candidate, value
        history.append(current)
        if on_epoch is not None:
            on_epoch(epochs, w, alpha)
        if viol < config.tolerance:
            converged = True
            break
    return SolverResult(w, w_dual, alpha, history, raw_history, dual_history, epochs, float(viol), converged)


@dataclass(frozen=True, eq=False)
class RankModel:
    weights: np.ndarray
    schema_id: str
    normalizer: Normalizer | None
    C: float
    diagnostics: dict = field(default_factory=dict)
    schema: object = None  # FeatureSchema, when known

    def scores(self, matrix):
        if matrix.schema_id != self.schema_id:
            raise SchemaMismatch(f"model expects schema {self.schema_id}, got {matrix.schema_id}")
        X = matrix.values if self.normalizer is None else self.normalizer.transform(matrix.values)
        return X @ self.weights


def train_ranksvm(pairs, C=DEFAULT_C, config=SolverConfig(), schema=None):
    result = solve_dual_cd(pairs, C, config)
    objective, slack_sum, violations = primal_terms(result.w, pairs, C)
    diagnostics = {
        "C": float(C),
        "objective": objective,
        "slack_sum": slack_sum,
        "violations": violations,
        "n_pairs": len(pairs),
        "epochs": result.epochs,
        "max_violation": result.max_violation,
        "converged": result.converged,
        "seed": config.seed,
    }
    return RankModel(result.w, pairs.schema_id, pairs.normalizer, float(C), diagnostics, schema)


def fit_ranker(labeled_lists, matrices, C=DEFAULT_C, config=SolverConfig(), schema=None):
    """Fit the normalizer on ``matrices``, build pairs, and train."""
    matrices = list(matrices)
    norm = fit_normalizer(matrices)
    pairs = build_pairs(labeled_lists, matrices, norm, config.max_pairs_per_list, config.seed)
    return train_ranksvm(pairs, C, config, schema)


def score(model, vector):
    if isinstance(vector, FeatureVector):
        if vector.schema_id != model.schema_id:
            raise SchemaMismatch(f"model expects schema {model.schema_id}, got {vector.schema_id}")
        x = vector.values if model.normalizer is None else model.normalizer.transform(vector.values)
        return float(x @ model.weights)
    raise TypeError("score() takes a FeatureVector; use RankModel.scores for a matrix")


def _order(values, nbest):
    # descending value, ties by original decoder rank
    return np.lexsort((nbest.asr_ranks(), -np.asarray(values, dtype=np.float64)))


def rescore(model, nbest, matrix):
    """Hypothesis indices, best first."""
    return _order(model.scores(matrix), nbest)


def mode_scores(model, nbest, matrix, mode="f-only"):
    """Per-hypothesis decoding scores: ``f`` alone, or ``f + am + lm``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    f = model.scores(matrix)
    if mode == "additive":
        f = f + np.array([h.am_score + h.lm_score for h in nbest.hypotheses])
    return f


def ranked(model, nbest, matrix, mode="f-only"):
    """``(order, scores)``: hypothesis indices best first and their scores."""
    f = mode_scores(model, nbest, matrix, mode)
    order = _order(f, nbest)
    return order, f[order]


def decode_index(model, nbest, matrix, mode="f-only"):
    return int(ranked(model, nbest, matrix, mode)[0][0])


def decode(model, nbest, matrix, mode="f-only"):
    return nbest.hypotheses[decode_index(model, nbest, matrix, mode)]


def baseline_order(nbest):
    """Original decoder order."""
    return np.argsort(nbest.asr_ranks(), kind="stable")


# ---------------------------------------------------------------------------
# persistence


def save_model(model, path):
    if model.schema is None:
        raise ValueError("model has no schema attached; pass schema= when training")
    norm = model.normalizer
    record = {
        "format": MODEL_TAG,
        "schema_id": model.schema_id,
        "schema": model.schema.to_text(),
        "C": model.C,
        "weights": model.weights,
        "normalizer": None if norm is None else {"mean": norm.mean, "std": norm.std},
        "diagnostics": model.diagnostics,
    }
    with atomic_write(path) as fh:
        fh.write(dumps(record) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            rec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid model file: {exc.msg}", path=path) from None
    if rec.get("format") != MODEL_TAG:
        raise ParseError(f"expected format {MODEL_TAG!r}", path=path)
    schema = parse_schema(rec["schema"], path=path)
    if schema.schema_id != rec["schema_id"]:
        raise SchemaMismatch(f"{path}: stored schema_id does not match its schema")
    weights = np.array(rec["weights"], dtype=np.float64)
    if weights.shape != (schema.total_dim,):
        raise ParseError("weight vector length does not match schema", path=path)
    norm = rec.get("normalizer")
    if norm is not None:
        norm = Normalizer(np.array(norm["mean"]), np.array(norm["std"]), schema.schema_id)
    return RankModel(weights, schema.schema_id, norm, float(rec["C"]), rec.get("diagnostics", {}), schema)


__all__ = [
    "DEFAULT_C",
    "MODES",
    "SolverConfig",
    "PairSet",
    "build_pairs",
    "primal_terms",
    "solve_dual_cd",
    "SolverResult",
    "RankModel",
    "train_ranksvm",
    "fit_ranker",
    "score",
    "rescore",
    "decode",
    "decode_index",
    "mode_scores",
    "ranked",
    "baseline_order",
    "save_model",
    "load_model",
]
