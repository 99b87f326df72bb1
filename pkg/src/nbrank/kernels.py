"""Backend selection for the numeric inner loops.

The compiled ``_ckernels`` extension is used when it has been built; otherwise
the pure-Python ``_pykernels`` module is used. Setting ``NBRANK_PURE_PYTHON=1``
forces the fallback. Both backends expose the same four functions:

edit_counts(ref, hyp) -> (subs, ins, dels)
    Levenshtein counts over int32 token ids with sub > ins > del backtrace.
lda_sweep(words, docs, z, ndk, nkw, nk, alpha, beta, u)
    One collapsed Gibbs sweep over all tokens, updating counts in place.
infer_doc(words, phi_t, z, alpha, u, window) -> theta
    Gibbs inference for one document with fixed topic-word probabilities.
dcd_epoch(X, first, second, qdiag, alpha, w, C, order) -> max |projected grad|
    One dual coordinate descent pass over pairwise difference constraints.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("cython", "python")


def available_backends():
    return tuple(name for name in BACKENDS if name == "python" or _ckernels is not None)


def get_backend(name):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("nbrank._ckernels is not built; run `pip install -e .`")
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    if os.environ.get("NBRANK_PURE_PYTHON", "") not in ("", "0") or _ckernels is None:
        return "python"
    return "cython"


BACKEND = _select()
_active = get_backend(BACKEND)

edit_counts = _active.edit_counts
lda_sweep = _active.lda_sweep
infer_doc = _active.infer_doc
dcd_epoch = _active.dcd_epoch

__all__ = [
    "BACKEND",
    "available_backends",
    "get_backend",
    "edit_counts",
    "lda_sweep",
    "infer_doc",
    "dcd_epoch",
]
