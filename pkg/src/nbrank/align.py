"""Word-level Levenshtein alignment and word error rate."""

from dataclasses import dataclass

import numpy as np

from . import kernels


def normalize_token(token):
    return token.strip().lower()


@dataclass(frozen=True)
class EditStats:
    substitutions: int
    insertions: int
    deletions: int
    ref_len: int

    @property
    def errors(self):
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self):
        # empty reference: report the raw insertion count instead of a rate
        if self.ref_len == 0:
            return float(self.insertions)
        return self.errors / self.ref_len

    def __add__(self, other):
        return EditStats(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.ref_len + other.ref_len,
        )


def _encode(ref, hyp):
    ids = {}
    enc = [
        np.fromiter((ids.setdefault(normalize_token(t), len(ids)) for t in seq), dtype=np.intc, count=len(seq))
        for seq in (ref, hyp)
    ]
    return enc[0], enc[1]


def align(reference, hypothesis):
    """Minimum-edit alignment counts of ``hypothesis`` against ``reference``.

    Unit costs throughout. Among cost-minimal alignments the backtrace prefers
    substitution, then insertion, then deletion, so the S/I/D split is
    deterministic; the total is unaffected by the tie-break.
    """
    ref, hyp = list(reference), list(hypothesis)
    r, h = _encode(ref, hyp)
    subs, ins, dels = kernels.edit_counts(r, h)
    return EditStats(int(subs), int(ins), int(dels), len(ref))
