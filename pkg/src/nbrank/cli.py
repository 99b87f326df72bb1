"""Command-line pipeline: synth, train-lm, train-lda, extract-features,
train-ranker, rescore, evaluate, ablate.

Settings come from ``--config`` (JSON) with command-line flags taking
precedence. On failure a command prints one JSON line
``{"error": <ErrorName>, "message": ...}`` to stderr and exits with status 1.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from ._jsonio import atomic_write, dumps
from .errors import ConfigError, NbrankError, SchemaMismatch
from .features import FeatureModels, assemble, load_schema, read_features, write_features
from .metrics import (
    DEFAULT_K,
    ablate_features,
    fmt,
    format_table,
    ranking_report,
    wer_report,
)
from .nbest import DEFAULT_NBEST, label_list, read_nbest, write_nbest
from .ngram import read_arpa, train_ngram, write_arpa
from .ranker import DEFAULT_C, MODES, SolverConfig, fit_ranker, load_model, ranked, save_model
from .synth import SynthConfig, generate, write_corpus
from .topics import DEFAULT_BETA, DEFAULT_INFER_ITERS, load_topic_model, save_topic_model, train_lda

log = logging.getLogger("nbrank")


@dataclass
class RunConfig:
    seed: int = 0
    nbest: int = DEFAULT_NBEST
    k: int = DEFAULT_K
    mode: str = "f-only"
    order: int = 3
    C: float = DEFAULT_C
    tolerance: float = 1e-4
    max_epochs: int = 200
    max_pairs_per_list: int | None = None
    lda_K: int = 50
    lda_iters: int = 1000
    lda_alpha: float | None = None
    lda_beta: float = DEFAULT_BETA
    infer_iters: int = DEFAULT_INFER_ITERS
    synth: dict = field(default_factory=dict)

    def solver(self):
        return SolverConfig(self.max_epochs, self.tolerance, self.seed, self.max_pairs_per_list)


_NESTED = {
    "lda": {"K": "lda_K", "iters": "lda_iters", "alpha": "lda_alpha", "beta": "lda_beta", "infer_iters": "infer_iters"},
    "solver": {"C": "C", "tolerance": "tolerance", "max_epochs": "max_epochs", "max_pairs_per_list": "max_pairs_per_list"},
}


def load_config(path):
    """Flatten a JSON config file into ``RunConfig`` field values."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    flat = {}
    for key, value in raw.items():
        if key in _NESTED:
            for sub, sub_value in value.items():
                if sub not in _NESTED[key]:
                    raise ConfigError(f"unknown config key {key}.{sub}")
                flat[_NESTED[key][sub]] = sub_value
        elif key in RunConfig.__dataclass_fields__:
            flat[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return flat


def resolve_config(args):
    values = load_config(args.config) if args.config else {}
    for name in RunConfig.__dataclass_fields__:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    cfg = RunConfig(**values)
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    return cfg


def _require(*paths):
    for p in paths:
        if p is not None and not os.path.exists(p):
            raise ConfigError(f"input not found: {p}")


def _read_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh if line.strip()]


def _aligned(dataset, matrices, what):
    by_id = {m.utt_id: m for m in matrices}
    missing = [nb.utt_id for nb in dataset if nb.utt_id not in by_id]
    if missing:
        raise ConfigError(f"{what}: no features for utterance {missing[0]!r}")
    out = []
    for nb in dataset:
        m = by_id[nb.utt_id]
        if len(m) != len(nb):
            raise ConfigError(f"{what}: {nb.utt_id} has {len(nb)} hypotheses but {len(m)} feature rows")
        out.append(m)
    return out


def _load_split(data, features, cfg):
    _require(data, features)
    dataset = read_nbest(data, nbest=None)
    schema, matrices = read_features(features)
    return dataset, schema, _aligned(dataset, matrices, features)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args, cfg):
    overrides = dict(cfg.synth)
    for name in ("n_train", "n_dev", "n_test", "noise_rate", "emb_dim", "n_topics"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if args.nbest is not None:
        overrides["nbest"] = args.nbest
    if args.informativeness:
        info = dict(overrides.get("informativeness", {}))
        for item in args.informativeness:
            name, _, value = item.partition("=")
            try:
                info[name] = float(value)
            except ValueError:
                raise ConfigError(f"bad --informativeness {item!r}; expected NAME=VALUE") from None
        overrides["informativeness"] = info
    synth_cfg = SynthConfig.from_dict(overrides)
    corpus = generate(synth_cfg, cfg.seed)
    write_corpus(corpus, args.out, vector_format=args.vector_format)
    log.info("wrote synthetic corpus to %s", args.out)


def cmd_train_lm(args, cfg):
    _require(args.corpus)
    model = train_ngram(_read_corpus(args.corpus), cfg.order)
    write_arpa(model, args.out, comment=f"nbrank train-lm order={cfg.order} seed={cfg.seed}")
    log.info("trained %d-gram model, %d words", model.order, len(model.vocab))


def cmd_train_lda(args, cfg):
    _require(args.corpus)
    model = train_lda(_read_corpus(args.corpus), cfg.lda_K, cfg.lda_iters, cfg.seed, cfg.lda_alpha, cfg.lda_beta)
    save_topic_model(model, args.out, seed=cfg.seed)
    log.info("trained LDA with K=%d on %d word types", model.K, model.W)


def cmd_extract(args, cfg):
    _require(args.data, args.schema, args.lm, args.lda)
    schema = load_schema(args.schema)
    models = FeatureModels(
        ngram=read_arpa(args.lm) if args.lm else None,
        topics=load_topic_model(args.lda) if args.lda else None,
        infer_iters=cfg.infer_iters,
        seed=cfg.seed,
    )
    dataset = read_nbest(args.data, nbest=cfg.nbest)
    write_features(args.out, schema, [assemble(nb, schema, models) for nb in dataset], seed=cfg.seed)
    log.info("extracted %d-dim features for %d lists", schema.total_dim, len(dataset))


def cmd_train_ranker(args, cfg):
    dataset, schema, matrices = _load_split(args.data, args.features, cfg)
    labeled = [label_list(nb) for nb in dataset]
    model = fit_ranker(labeled, matrices, cfg.C, cfg.solver(), schema)
    save_model(model, args.out)
    d = model.diagnostics
    log.info("trained on %d pairs: objective %.6g after %d epochs", d["n_pairs"], d["objective"], d["epochs"])


def _scores_path(out):
    out = Path(out)
    stem = out.name[: -len(".jsonl")] if out.name.endswith(".jsonl") else out.name
    return out.with_name(stem + ".scores.jsonl")


def cmd_rescore(args, cfg):
    _require(args.model)
    model = load_model(args.model)
    dataset, schema, matrices = _load_split(args.data, args.features, cfg)
    if schema.schema_id != model.schema_id:
        raise SchemaMismatch(f"features use schema {schema.schema_id}, model expects {model.schema_id}")
    reordered, records = [], []
    for nb, m in zip(dataset, matrices):
        order, scores = ranked(model, nb, m, cfg.mode)
        reordered.append(nb.reordered(order))
        records.append({"utt_id": nb.utt_id, "seed": cfg.seed, "mode": cfg.mode, "order": order, "scores": scores})
    write_nbest(reordered, args.out)
    with atomic_write(_scores_path(args.out)) as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
    log.info("rescored %d lists", len(dataset))


def evaluate_dataset(dataset, k):
    labeled = [label_list(nb) for nb in dataset]
    identity = [list(range(len(nb))) for nb in dataset]
    return ranking_report(labeled, identity, k), wer_report(dataset, [0] * len(dataset))


def cmd_evaluate(args, cfg):
    _require(args.data)
    dataset = read_nbest(args.data, nbest=None, load_vectors=False)
    ranking, wer = evaluate_dataset(dataset, cfg.k)
    rows = [
        (f"NDCG@{cfg.k}", fmt(ranking.mean)),
        ("WER selected %", fmt(wer.selected.percent, 3)),
        ("WER baseline %", fmt(wer.baseline.percent, 3)),
        ("WER oracle %", fmt(wer.oracle.percent, 3)),
    ]
    table = format_table(("metric", "value"), rows)
    sys.stdout.write(table)
    if args.out:
        with atomic_write(args.out) as fh:
            fh.write(dumps({"record": "summary", "seed": cfg.seed, "k": cfg.k, "ndcg": ranking.mean,
                            "wer_selected": wer.selected.wer, "wer_baseline": wer.baseline.wer,
                            "wer_oracle": wer.oracle.wer}) + "\n")
            for nb in dataset:
                uid = nb.utt_id
                st = wer.selected.per_utterance[uid]
                fh.write(dumps({"record": "utterance", "utt_id": uid, "ndcg": ranking.per_utterance[uid],
                                "errors": st.errors, "ref_len": st.ref_len,
                                "baseline_errors": wer.baseline.per_utterance[uid].errors,
                                "oracle_errors": wer.oracle.per_utterance[uid].errors}) + "\n")
        with atomic_write(_text_path(args.out)) as fh:
            fh.write(table)


def _text_path(out):
    out = Path(out)
    return out.with_suffix(".txt") if out.suffix != ".txt" else out.with_suffix(".table.txt")


def cmd_ablate(args, cfg):
    train_ds, schema, train_m = _load_split(args.train, args.train_features, cfg)
    train = ([label_list(nb) for nb in train_ds], train_m)
    evals = {}
    for split in ("dev", "test"):
        data, feats = getattr(args, split), getattr(args, f"{split}_features")
        if data:
            ds, sch, mats = _load_split(data, feats, cfg)
            if sch.schema_id != schema.schema_id:
                raise SchemaMismatch(f"{split} features use a different schema")
            evals[split] = ([label_list(nb) for nb in ds], mats)
    rows = ablate_features(schema, train, evals, cfg.C, cfg.solver(), cfg.k, args.per_dimension)
    splits = ["train", *evals]
    names = schema.dimension_names()
    table_rows = [
        (r.block if r.column is None else names[r.column], r.dim, *(fmt(r.ndcg[s]) for s in splits)) for r in rows
    ]
    table = format_table(("block", "dim", *(f"NDCG@{cfg.k} {s}" for s in splits)), table_rows)
    sys.stdout.write(table)
    if args.out:
        with atomic_write(args.out) as fh:
            for r in rows:
                rec = {"block": r.block, "dim": r.dim, "column": r.column, "k": cfg.k, "seed": cfg.seed, "ndcg": r.ndcg}
                fh.write(dumps(rec) + "\n")
        with atomic_write(_text_path(args.out)) as fh:
            fh.write(table)


# ---------------------------------------------------------------------------
# argument parsing


def _common(p, out_required=True):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=out_required)
    p.add_argument("--schema")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--k", type=int, help="NDCG cutoff (default 10)")
    p.add_argument("--nbest", type=int, help="hypotheses kept per list (default 50)")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser():
    parser = argparse.ArgumentParser(prog="nbrank", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic N-best corpus")
    _common(p)
    p.add_argument("--n-train", dest="n_train", type=int)
    p.add_argument("--n-dev", dest="n_dev", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--noise-rate", dest="noise_rate", type=float)
    p.add_argument("--emb-dim", dest="emb_dim", type=int)
    p.add_argument("--n-topics", dest="n_topics", type=int)
    p.add_argument("--informativeness", action="append", metavar="NAME=VALUE")
    p.add_argument("--vector-format", choices=("text", "f32le"), default="text")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-lm", help="train a Witten-Bell n-gram model (ARPA output)")
    _common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("train-lda", help="train an LDA topic model")
    _common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--K", dest="lda_K", type=int)
    p.add_argument("--iters", dest="lda_iters", type=int)
    p.add_argument("--alpha", dest="lda_alpha", type=float)
    p.add_argument("--beta", dest="lda_beta", type=float)
    p.set_defaults(func=cmd_train_lda)

    p = sub.add_parser("extract-features", help="assemble feature vectors for a dataset")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--lm")
    p.add_argument("--lda")
    p.add_argument("--infer-iters", dest="infer_iters", type=int)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-ranker", help="train the pairwise ranking SVM")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--max-pairs-per-list", dest="max_pairs_per_list", type=int)
    p.set_defaults(func=cmd_train_ranker)

    p = sub.add_parser("rescore", help="reorder N-best lists with a trained model")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("evaluate", help="NDCG@k and WER of the list order in a dataset")
    _common(p, out_required=False)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="NDCG@k of models trained on single feature blocks")
    _common(p, out_required=False)
    p.add_argument("--train", required=True)
    p.add_argument("--train-features", dest="train_features", required=True)
    p.add_argument("--dev")
    p.add_argument("--dev-features", dest="dev_features")
    p.add_argument("--test")
    p.add_argument("--test-features", dest="test_features")
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--per-dimension", dest="per_dimension", action="store_true")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "extract-features" and not args.schema:
            raise ConfigError("extract-features needs --schema")
        args.func(args, cfg)
    except NbrankError as exc:
        _fail(type(exc).__name__, exc)
        return 1
    except (OSError, ValueError, TypeError) as exc:
        _fail(type(exc).__name__, exc)
        return 1
    return 0


def _fail(name, exc):
    message = " ".join(str(exc).split())
    sys.stderr.write(json.dumps({"error": name, "message": message}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
