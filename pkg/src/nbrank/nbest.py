"""N-best lists, WER-based relevance labels, and the line-delimited dataset format.

A dataset file holds one JSON record per line::

    {"utt_id": "u1", "reference": ["a", "b"],
     "hyps": [{"tokens": ["a", "b"], "am_score": -12.5, "lm_score": -8.25,
               "asr_rank": 0, "ext_scalars": {"rnnlm-ppl": 81.0},
               "ext_vec_ref": {"file": "train.bert-emb.vec", "row": 0}}]}

``ext_vec_ref`` may also be a list of such objects when a hypothesis carries
several vectors. Sidecar paths are relative to the dataset file.
"""

import json
import math
import os
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from ._jsonio import atomic_write, dumps
from .align import align
from .errors import DuplicateUtterance, MissingReference, ParseError
from .sidecar import read_vectors, write_vectors

DEFAULT_NBEST = 50


def _freeze_vector(v):
    # embeddings are held at single precision so sidecar round trips are exact
    arr = np.asarray(v, dtype=np.float32).astype(np.float64)
    if arr.ndim != 1:
        raise ValueError("external vectors must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """One decoder output. ``tokens == ()`` marks a legal empty hypothesis."""

    tokens: tuple
    am_score: float
    lm_score: float
    asr_rank: int
    ext_scalars: Mapping = field(default_factory=dict)
    ext_vectors: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(str(t) for t in self.tokens))
        object.__setattr__(self, "am_score", float(self.am_score))
        object.__setattr__(self, "lm_score", float(self.lm_score))
        object.__setattr__(self, "asr_rank", int(self.asr_rank))
        scalars = {str(k): float(v) for k, v in self.ext_scalars.items()}
        vectors = {str(k): _freeze_vector(v) for k, v in self.ext_vectors.items()}
        object.__setattr__(self, "ext_scalars", MappingProxyType(scalars))
        object.__setattr__(self, "ext_vectors", MappingProxyType(vectors))

    @property
    def is_empty(self):
        return not self.tokens

    def __eq__(self, other):
        if not isinstance(other, Hypothesis):
            return NotImplemented
        return (
            self.tokens == other.tokens
            and self.am_score == other.am_score
            and self.lm_score == other.lm_score
            and self.asr_rank == other.asr_rank
            and dict(self.ext_scalars) == dict(other.ext_scalars)
            and self.ext_vectors.keys() == other.ext_vectors.keys()
            and all(np.array_equal(v, other.ext_vectors[k]) for k, v in self.ext_vectors.items())
        )

    __hash__ = None


@dataclass(frozen=True)
class NBestList:
    utt_id: str
    hypotheses: tuple
    reference: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        if self.reference is not None:
            object.__setattr__(self, "reference", tuple(str(t) for t in self.reference))
        ranks = sorted(h.asr_rank for h in self.hypotheses)
        if ranks != list(range(len(ranks))):
            raise ValueError(f"{self.utt_id}: asr_rank values must be a permutation of 0..n-1")

    def __len__(self):
        return len(self.hypotheses)

    def asr_ranks(self):
        return np.array([h.asr_rank for h in self.hypotheses], dtype=np.int64)

    def reordered(self, order):
        return NBestList(self.utt_id, [self.hypotheses[i] for i in order], self.reference)

    def truncate(self, n):
        """Keep the ``n`` best hypotheses by original decoder rank."""
        return NBestList(self.utt_id, [h for h in self.hypotheses if h.asr_rank < n], self.reference)


@dataclass(frozen=True)
class LabeledList:
    list: NBestList
    labels: tuple
    stats: tuple  # EditStats per hypothesis

    @property
    def utt_id(self):
        return self.list.utt_id


def dense_grades(errors):
    """Dense-rank grades: fewest errors -> highest grade, ties share a grade, min grade 0."""
    levels = sorted(set(errors))
    top = len(levels) - 1
    index = {e: i for i, e in enumerate(levels)}
    return tuple(top - index[e] for e in errors)


def label_list(nbest):
    if nbest.reference is None:
        raise MissingReference(nbest.utt_id)
    stats = tuple(align(nbest.reference, h.tokens) for h in nbest.hypotheses)
    # ref_len is shared within a list, so ordering by error count orders by WER
    return LabeledList(nbest, dense_grades([s.errors for s in stats]), stats)


# ---------------------------------------------------------------------------
# serialization


def _sidecar_name(path, vec_name):
    stem = Path(path).name
    for suffix in (".jsonl", ".json", ".txt"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    safe = re.sub(r"[^A-Za-z0-9_.-]", "_", vec_name)
    return f"{stem}.{safe}.vec"


def write_nbest(dataset, path, vector_format="text"):
    """Write ``dataset`` to ``path``; external vectors go to sidecars next to it."""
    path = Path(path)
    tables = {}  # vec name -> list of rows
    refs = []
    for nb in dataset:
        per_hyp = []
        for h in nb.hypotheses:
            hyp_refs = []
            for name in sorted(h.ext_vectors):
                rows = tables.setdefault(name, [])
                hyp_refs.append({"file": _sidecar_name(path, name), "row": len(rows)})
                rows.append((nb.utt_id, h.asr_rank, h.ext_vectors[name]))
            per_hyp.append(hyp_refs)
        refs.append(per_hyp)

    for name, rows in tables.items():
        dims = {len(r[2]) for r in rows}
        if len(dims) != 1:
            raise ValueError(f"vector {name!r} has inconsistent dimensions {sorted(dims)}")
        write_vectors(path.parent / _sidecar_name(path, name), name, dims.pop(), rows, fmt=vector_format)

    seen = set()
    with atomic_write(path) as fh:
        for nb, per_hyp in zip(dataset, refs):
            if nb.utt_id in seen:
                raise DuplicateUtterance(nb.utt_id)
            seen.add(nb.utt_id)
            hyps = []
            for h, hyp_refs in zip(nb.hypotheses, per_hyp):
                rec = {
                    "tokens": list(h.tokens),
                    "am_score": h.am_score,
                    "lm_score": h.lm_score,
                    "asr_rank": h.asr_rank,
                    "ext_scalars": dict(sorted(h.ext_scalars.items())),
                }
                if len(hyp_refs) == 1:
                    rec["ext_vec_ref"] = hyp_refs[0]
                elif hyp_refs:
                    rec["ext_vec_ref"] = hyp_refs
                hyps.append(rec)
            record = {
                "utt_id": nb.utt_id,
                "reference": list(nb.reference) if nb.reference is not None else None,
                "hyps": hyps,
            }
            fh.write(dumps(record) + "\n")


def _number(obj, key, lineno, path):
    if key not in obj:
        raise ParseError(f"missing field {key!r}", line=lineno, path=path)
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ParseError(f"field {key!r} must be a finite number", line=lineno, path=path)
    return float(v)


def _tokens(v, what, lineno, path):
    if not isinstance(v, list) or not all(isinstance(t, str) for t in v):
        raise ParseError(f"{what} must be an array of strings", line=lineno, path=path)
    return v


def _parse_record(line, lineno, path):
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=lineno, path=path) from None
    if not isinstance(rec, dict):
        raise ParseError("record is not an object", line=lineno, path=path)
    utt_id = rec.get("utt_id")
    if not isinstance(utt_id, str) or not utt_id:
        raise ParseError("missing or empty utt_id", line=lineno, path=path)
    reference = rec.get("reference")
    if reference is not None:
        reference = _tokens(reference, "reference", lineno, path)
    hyps = rec.get("hyps")
    if not isinstance(hyps, list):
        raise ParseError("missing hyps array", line=lineno, path=path)
    parsed = []
    for h in hyps:
        if not isinstance(h, dict):
            raise ParseError("hypothesis is not an object", line=lineno, path=path)
        if "tokens" not in h:
            raise ParseError("missing field 'tokens'", line=lineno, path=path)
        rank = h.get("asr_rank")
        if isinstance(rank, bool) or not isinstance(rank, int):
            raise ParseError("field 'asr_rank' must be an integer", line=lineno, path=path)
        scalars = h.get("ext_scalars", {})
        if not isinstance(scalars, dict):
            raise ParseError("ext_scalars must be an object", line=lineno, path=path)
        for k in scalars:
            _number(scalars, k, lineno, path)
        vref = h.get("ext_vec_ref")
        if vref is None:
            vref = []
        elif isinstance(vref, dict):
            vref = [vref]
        if not isinstance(vref, list) or not all(
            isinstance(r, dict) and isinstance(r.get("file"), str) and isinstance(r.get("row"), int)
            for r in vref
        ):
            raise ParseError("ext_vec_ref must be {file, row} or a list of them", line=lineno, path=path)
        parsed.append(
            dict(
                tokens=_tokens(h["tokens"], "tokens", lineno, path),
                am_score=_number(h, "am_score", lineno, path),
                lm_score=_number(h, "lm_score", lineno, path),
                asr_rank=rank,
                ext_scalars=scalars,
                vec_refs=vref,
            )
        )
    return utt_id, reference, parsed


def read_nbest(path, nbest=None, load_vectors=True):
    """Read a dataset. ``nbest`` keeps only hypotheses with ``asr_rank < nbest``."""
    path = Path(path)
    base = path.parent
    tables = {}
    dataset = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            utt_id, reference, hyps = _parse_record(line, lineno, path)
            if utt_id in seen:
                raise DuplicateUtterance(utt_id)
            seen.add(utt_id)
            built = []
            for h in hyps:
                vectors = {}
                if load_vectors:
                    for ref in h["vec_refs"]:
                        fname = ref["file"]
                        if fname not in tables:
                            sidecar = base / fname
                            if not os.path.exists(sidecar):
                                raise ParseError(f"sidecar {fname!r} not found", line=lineno, path=path)
                            tables[fname] = read_vectors(sidecar)
                        table = tables[fname]
                        row = ref["row"]
                        if not 0 <= row < len(table.keys) or table.keys[row] != (utt_id, h["asr_rank"]):
                            raise ParseError(
                                f"{fname} row {row} does not belong to this hypothesis",
                                line=lineno,
                                path=path,
                            )
                        vectors[table.name] = table.values[row]
                built.append(
                    Hypothesis(
                        h["tokens"], h["am_score"], h["lm_score"], h["asr_rank"], h["ext_scalars"], vectors
                    )
                )
            try:
                nb = NBestList(utt_id, built, reference)
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno, path=path) from None
            if nbest is not None:
                nb = nb.truncate(nbest)
            dataset.append(nb)
    return dataset
