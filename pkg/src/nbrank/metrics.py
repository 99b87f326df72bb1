"""Ranking and recognition metrics: NDCG@k, pooled WER, oracle WER, feature ablation."""

import math
from dataclasses import dataclass, field

import numpy as np

from .align import EditStats, align
from .errors import InvalidK, MissingReference
from .ranker import DEFAULT_C, SolverConfig, baseline_order, fit_ranker, rescore

DEFAULT_K = 10


def dcg_at_k(grades_in_rank_order, k):
    g = np.asarray(grades_in_rank_order, dtype=np.float64)[:k]
    discounts = np.log2(np.arange(2, g.shape[0] + 2))
    return float(((2.0**g - 1.0) / discounts).sum())


def ndcg_at_k(permutation, grades, k=DEFAULT_K):
    """NDCG@k of presenting items in ``permutation`` order.

    Gain ``2**grade - 1``, discount ``log2(position + 1)``. A list whose ideal
    DCG is zero (all grades 0) cannot be misordered and scores 1.
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    grades = np.asarray(grades)
    perm = np.asarray(permutation, dtype=np.intp)
    if sorted(perm.tolist()) != list(range(grades.shape[0])):
        raise ValueError("permutation is not a permutation of the list indices")
    ideal = dcg_at_k(np.sort(grades)[::-1], k)
    if ideal == 0.0:
        return 1.0
    return dcg_at_k(grades[perm], k) / ideal


@dataclass(frozen=True)
class RankingReport:
    k: int
    per_utterance: dict  # utt_id -> NDCG@k

    @property
    def mean(self):
        vals = list(self.per_utterance.values())
        return float(np.mean(vals)) if vals else float("nan")


def ranking_report(labeled_lists, permutations, k=DEFAULT_K):
    return RankingReport(
        k, {lab.utt_id: ndcg_at_k(perm, lab.labels, k) for lab, perm in zip(labeled_lists, permutations)}
    )


@dataclass(frozen=True)
class WerEntry:
    stats: EditStats
    per_utterance: dict = field(default_factory=dict)  # utt_id -> EditStats

    @property
    def wer(self):
        return self.stats.errors / self.stats.ref_len if self.stats.ref_len else float(self.stats.insertions)

    @property
    def percent(self):
        return 100.0 * self.wer


def corpus_wer(selected, references, utt_ids=None):
    """Pooled WER: total errors over total reference words."""
    selected, references = list(selected), list(references)
    if len(selected) != len(references):
        raise ValueError("selected and references differ in length")
    utt_ids = list(utt_ids) if utt_ids is not None else [str(i) for i in range(len(selected))]
    total = EditStats(0, 0, 0, 0)
    per = {}
    for uid, hyp, ref in zip(utt_ids, selected, references):
        if ref is None:
            raise MissingReference(uid)
        st = align(ref, hyp)
        per[uid] = st
        total = total + st
    return WerEntry(total, per)


def oracle_choice(nbest):
    """Index of the lowest-WER hypothesis, ties to the lowest asr_rank."""
    if nbest.reference is None:
        raise MissingReference(nbest.utt_id)
    errors = [align(nbest.reference, h.tokens).errors for h in nbest.hypotheses]
    return min(range(len(nbest)), key=lambda i: (errors[i], nbest.hypotheses[i].asr_rank))


def oracle_wer(dataset):
    dataset = list(dataset)
    chosen = [nb.hypotheses[oracle_choice(nb)].tokens for nb in dataset]
    return corpus_wer(chosen, [nb.reference for nb in dataset], [nb.utt_id for nb in dataset])


@dataclass(frozen=True)
class WerReport:
    selected: WerEntry
    oracle: WerEntry
    baseline: WerEntry


def wer_report(dataset, choices):
    """``choices[i]`` is the selected hypothesis index of list ``i``."""
    dataset = list(dataset)
    refs = [nb.reference for nb in dataset]
    ids = [nb.utt_id for nb in dataset]
    sel = corpus_wer([nb.hypotheses[c].tokens for nb, c in zip(dataset, choices)], refs, ids)
    base = corpus_wer([nb.hypotheses[int(baseline_order(nb)[0])].tokens for nb in dataset], refs, ids)
    return WerReport(sel, oracle_wer(dataset), base)


# ---------------------------------------------------------------------------
# ablation


@dataclass(frozen=True)
class AblationRow:
    block: str
    dim: int
    ndcg: dict  # split name -> mean NDCG@k
    column: int | None = None  # set for single-dimension rows


def _evaluate_slice(schema, cols, train, evals, C, config, k):
    train_lab, train_mats = train
    sid = f"{schema.schema_id}:{','.join(map(str, cols))}"
    train_sub = [m.columns(cols, sid) for m in train_mats]
    model = fit_ranker(train_lab, train_sub, C, config)
    out = {}
    for split, (labs, mats) in evals.items():
        sub_mats = train_sub if split == "train" else [m.columns(cols, sid) for m in mats]
        perms = [rescore(model, lab.list, m) for lab, m in zip(labs, sub_mats)]
        out[split] = ranking_report(labs, perms, k).mean
    return out


def ablate_features(schema, train, evals, C=DEFAULT_C, config=SolverConfig(), k=DEFAULT_K, per_dimension=False):
    """Train one model per schema block (and optionally per column) and report NDCG@k.

    ``train`` is ``(labeled_lists, feature_matrices)``; ``evals`` maps split
    names to the same kind of pair. A final ``all`` row uses the whole schema.
    """
    evals = {"train": train, **dict(evals)}
    offsets = schema.offsets()
    rows = []
    for b in schema.blocks:
        cols = np.arange(*offsets[b.name])
        rows.append(AblationRow(b.name, b.dim, _evaluate_slice(schema, cols, train, evals, C, config, k)))
        if per_dimension and b.dim > 1:
            for c in cols:
                res = _evaluate_slice(schema, np.array([c]), train, evals, C, config, k)
                rows.append(AblationRow(b.name, 1, res, int(c)))
    all_cols = np.arange(schema.total_dim)
    rows.append(AblationRow("all", schema.total_dim, _evaluate_slice(schema, all_cols, train, evals, C, config, k)))
    return rows


def format_table(header, rows):
    """Left-aligned text table."""
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"


def fmt(x, digits=4):
    return "nan" if math.isnan(x) else f"{x:.{digits}f}"
