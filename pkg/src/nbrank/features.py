"""Feature schemas, per-hypothesis feature assembly, and z-score normalization.

A schema is an ordered list of blocks. Each block names where its values come
from:

==================  ====  ==================================================
source              dim   values
==================  ====  ==================================================
builtin-ngram       2     ln P(w) under the n-gram model, ln perplexity
builtin-tmlm        2     ln P(w | theta) under the topic-model LM, ln ppl
builtin-topicvec    K     inferred topic mixture theta
hypothesis-field    1     ``am_score`` or ``lm_score`` (``key=``)
ext-scalar          1     ``ext_scalars[key]``; ``transform=log`` for ppl
ext-vector          any   ``ext_vectors[key]``
==================  ====  ==================================================

Schema files hold one block per line: ``name source dim [key=..] [transform=..]``.
"""

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from ._jsonio import atomic_write, dumps
from .errors import DimMismatch, MissingFeature, NonFiniteFeature, ParseError, SchemaMismatch
from .ngram import LN10, sentence_logprob
from .topics import DEFAULT_INFER_ITERS, infer_theta, tm_lm_logprob

SOURCES = (
    "builtin-ngram",
    "builtin-tmlm",
    "builtin-topicvec",
    "hypothesis-field",
    "ext-scalar",
    "ext-vector",
)
FIXED_DIMS = {"builtin-ngram": 2, "builtin-tmlm": 2, "hypothesis-field": 1, "ext-scalar": 1}
HYPOTHESIS_FIELDS = ("am_score", "lm_score")
TRANSFORMS = ("identity", "log")
SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class FeatureBlock:
    name: str
    source: str
    dim: int
    key: str | None = None
    transform: str = "identity"

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"bad block name {self.name!r}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown feature source {self.source!r}")
        if self.dim < 1:
            raise ValueError(f"block {self.name!r}: dim must be >= 1")
        fixed = FIXED_DIMS.get(self.source)
        if fixed is not None and self.dim != fixed:
            raise DimMismatch(f"block {self.name!r}: {self.source} has dim {fixed}, got {self.dim}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.source == "hypothesis-field" and self.lookup not in HYPOTHESIS_FIELDS:
            raise ValueError(f"block {self.name!r}: key must be one of {HYPOTHESIS_FIELDS}")

    @property
    def lookup(self):
        return self.key if self.key is not None else self.name

    def to_line(self):
        parts = [self.name, self.source, str(self.dim)]
        if self.key is not None:
            parts.append(f"key={self.key}")
        if self.transform != "identity":
            parts.append(f"transform={self.transform}")
        return " ".join(parts)


@dataclass(frozen=True)
class FeatureSchema:
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise ValueError("block names must be unique")

    @property
    def total_dim(self):
        return sum(b.dim for b in self.blocks)

    @property
    def schema_id(self):
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]

    def offsets(self):
        """``{name: (start, stop)}`` column ranges."""
        out, start = {}, 0
        for b in self.blocks:
            out[b.name] = (start, start + b.dim)
            start += b.dim
        return out

    def block(self, name):
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def to_text(self):
        return "".join(b.to_line() + "\n" for b in self.blocks)

    def select(self, names):
        """Sub-schema of the named blocks and the matching column indices."""
        offs = self.offsets()
        blocks = [self.block(n) for n in names]
        cols = np.concatenate([np.arange(*offs[b.name]) for b in blocks])
        return FeatureSchema(blocks), cols

    def dimension_names(self):
        names = []
        for b in self.blocks:
            names.extend([b.name] if b.dim == 1 else [f"{b.name}[{i}]" for i in range(b.dim)])
        return names


def parse_schema(text, path=None):
    blocks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParseError("expected 'name source [dim] [key=..] [transform=..]'", line=lineno, path=path)
        name, source, rest = parts[0], parts[1], parts[2:]
        dim = FIXED_DIMS.get(source)
        opts = {}
        for part in rest:
            if "=" in part:
                k, v = part.split("=", 1)
                if k not in ("key", "transform"):
                    raise ParseError(f"unknown option {k!r}", line=lineno, path=path)
                opts[k] = v
            else:
                try:
                    dim = int(part)
                except ValueError:
                    raise ParseError(f"bad dim {part!r}", line=lineno, path=path) from None
        if dim is None:
            raise ParseError(f"block {name!r} needs an explicit dim", line=lineno, path=path)
        try:
            blocks.append(FeatureBlock(name, source, dim, **opts))
        except (ValueError, DimMismatch) as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
    try:
        return FeatureSchema(blocks)
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


def load_schema(path):
    with open(path, encoding="utf-8") as fh:
        return parse_schema(fh.read(), path=path)


def save_schema(schema, path):
    with atomic_write(path) as fh:
        fh.write("# name source dim [key=..] [transform=..]\n")
        fh.write(schema.to_text())


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    schema_id: str


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Feature vectors for every hypothesis of one list, row ``i`` for hypothesis ``i``."""

    utt_id: str
    schema_id: str
    values: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def vectors(self):
        return [FeatureVector(row, self.schema_id) for row in self.values]

    def columns(self, cols, schema_id):
        return FeatureMatrix(self.utt_id, schema_id, np.ascontiguousarray(self.values[:, cols]))


@dataclass(frozen=True)
class FeatureModels:
    """Trained extractors and inference settings used by the builtin blocks."""

    ngram: object = None
    topics: object = None
    infer_iters: int = DEFAULT_INFER_ITERS
    seed: int = 0


def _check_resolvable(schema, models):
    for b in schema.blocks:
        if b.source == "builtin-ngram" and models.ngram is None:
            raise ValueError(f"block {b.name!r} needs an n-gram model")
        if b.source in ("builtin-tmlm", "builtin-topicvec"):
            if models.topics is None:
                raise ValueError(f"block {b.name!r} needs a topic model")
            if b.source == "builtin-topicvec" and b.dim != models.topics.K:
                raise DimMismatch(f"block {b.name!r}: dim {b.dim} but topic model has K={models.topics.K}")


def assemble(nbest, schema, models=None):
    """Assemble the feature matrix of one N-best list."""
    models = models or FeatureModels()
    _check_resolvable(schema, models)
    needs_theta = any(b.source in ("builtin-tmlm", "builtin-topicvec") for b in schema.blocks)
    out = np.empty((len(nbest), schema.total_dim), dtype=np.float64)

    for i, hyp in enumerate(nbest.hypotheses):
        theta = infer_theta(models.topics, hyp.tokens, models.infer_iters, models.seed) if needs_theta else None
        col = 0
        for b in schema.blocks:
            if b.source == "builtin-ngram":
                lp = sentence_logprob(models.ngram, hyp.tokens) * LN10
                vals = [lp, -lp / (len(hyp.tokens) + 1)]
            elif b.source == "builtin-tmlm":
                score = tm_lm_logprob(models.topics, theta, hyp.tokens)
                vals = [score.logprob, score.log_perplexity]
            elif b.source == "builtin-topicvec":
                vals = theta
            elif b.source == "hypothesis-field":
                vals = [getattr(hyp, b.lookup)]
            elif b.source == "ext-scalar":
                if b.lookup not in hyp.ext_scalars:
                    raise MissingFeature(nbest.utt_id, i, b.name)
                v = hyp.ext_scalars[b.lookup]
                if b.transform == "log":
                    if not v > 0:
                        raise NonFiniteFeature(f"{nbest.utt_id} hypothesis {i}: {b.name}={v} has no logarithm")
                    v = math.log(v)
                vals = [v]
            else:
                if b.lookup not in hyp.ext_vectors:
                    raise MissingFeature(nbest.utt_id, i, b.name)
                vals = hyp.ext_vectors[b.lookup]
                if len(vals) != b.dim:
                    raise DimMismatch(
                        f"{nbest.utt_id} hypothesis {i}: {b.name} has dim {len(vals)}, schema says {b.dim}"
                    )
            out[i, col : col + b.dim] = vals
            col += b.dim

    if not np.isfinite(out).all():
        raise NonFiniteFeature(f"{nbest.utt_id}: non-finite feature value")
    return FeatureMatrix(nbest.utt_id, schema.schema_id, out)


def assemble_dataset(dataset, schema, models=None):
    return [assemble(nb, schema, models) for nb in dataset]


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True, eq=False)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray  # already floored at SIGMA_FLOOR
    schema_id: str

    def transform(self, values):
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def inverse(self, values):
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


def _stack(items):
    items = list(items)
    if not items:
        return np.empty((0, 0)), None
    ids = {it.schema_id for it in items}
    if len(ids) != 1:
        raise SchemaMismatch(f"vectors come from {len(ids)} different schemas")
    rows = [it.values if it.values.ndim == 2 else it.values[None, :] for it in items]
    return np.vstack(rows), ids.pop()


def fit_normalizer(vectors):
    """Fit per-dimension mean and (population) standard deviation.

    ``vectors`` is a sequence of :class:`FeatureMatrix` or :class:`FeatureVector`.
    """
    X, schema_id = _stack(vectors)
    if X.shape[0] < 2:
        raise ValueError("need at least two vectors to fit a normalizer")
    mean = X.mean(axis=0)
    constant = (X == X[0]).all(axis=0)
    # exact mean for constant columns so they map to exactly 0
    mean[constant] = X[0, constant]
    std = np.maximum(X.std(axis=0), SIGMA_FLOOR)
    return Normalizer(mean, std, schema_id)


def apply_normalizer(norm, vectors):
    """Normalize a FeatureMatrix, FeatureVector, or a sequence of either."""
    if isinstance(vectors, (FeatureMatrix, FeatureVector)):
        if vectors.schema_id != norm.schema_id:
            raise SchemaMismatch(f"normalizer fit on schema {norm.schema_id}, got {vectors.schema_id}")
        if isinstance(vectors, FeatureMatrix):
            return FeatureMatrix(vectors.utt_id, vectors.schema_id, norm.transform(vectors.values))
        return FeatureVector(norm.transform(vectors.values), vectors.schema_id)
    return [apply_normalizer(norm, v) for v in vectors]


# ---------------------------------------------------------------------------
# feature files

FEATURES_TAG = "nbrank-features 1"


def write_features(path, schema, matrices, seed=None):
    with atomic_write(path) as fh:
        header = {"format": FEATURES_TAG, "schema_id": schema.schema_id, "schema": schema.to_text(), "seed": seed}
        fh.write(dumps(header) + "\n")
        for m in matrices:
            if m.schema_id != schema.schema_id:
                raise SchemaMismatch(f"{m.utt_id}: matrix schema {m.schema_id} != {schema.schema_id}")
            fh.write(dumps({"utt_id": m.utt_id, "rows": m.values}) + "\n")


def read_features(path):
    """Return ``(schema, [FeatureMatrix, ...])`` from a feature file."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    try:
        header = json.loads(lines[0])
    except (IndexError, json.JSONDecodeError):
        raise ParseError("missing feature-file header", line=1, path=path) from None
    if header.get("format") != FEATURES_TAG:
        raise ParseError(f"expected format {FEATURES_TAG!r}", line=1, path=path)
    schema = parse_schema(header["schema"], path=path)
    if schema.schema_id != header.get("schema_id"):
        raise SchemaMismatch(f"{path}: header schema_id does not match its schema")
    matrices = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            values = np.array(rec["rows"], dtype=np.float64).reshape(-1, schema.total_dim)
        except (json.JSONDecodeError, KeyError, ValueError):
            raise ParseError("malformed feature record", line=lineno, path=path) from None
        matrices.append(FeatureMatrix(rec["utt_id"], schema.schema_id, values))
    return schema, matrices
