"""Command-line front end.

Subcommands cover the whole workflow: ``make-corpus`` (synthetic data),
``dump`` (corpus inspection JSON), ``pretrain`` (graph embeddings),
``train`` (five-fold cross-validation), ``eval`` (out-of-fold report),
``summarize`` (top-k triples of one entity) and ``attention`` (per-layer
score export for one entity).

Options may come from a JSON config file (``--config``); explicit flags
override file values.  The data root defaults to the ``KGSUM_DATA``
environment variable.  Exit codes: 0 success, 1 runtime error, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from kgsum import __version__
from kgsum.checkpoint import load_embeddings, save_embeddings
from kgsum.corpus import load_dataset
from kgsum.errors import KgsumError
from kgsum.metrics import top_k
from kgsum.model import VARIANTS
from kgsum.pipeline import (
    load_fold_models,
    mean_scores_over_seeds,
    out_of_fold_scores,
    save_cv_run,
    train_cv,
)
from kgsum.rdf import to_ntriples
from kgsum.report import build_report
from kgsum.training import TrainConfig
from kgsum.transe import TransEConfig, train_transe

__all__ = ["main"]


def _data_root(args) -> str:
    root = args.data or os.environ.get("KGSUM_DATA")
    if not root:
        raise KgsumError("no data root: pass --data or set KGSUM_DATA")
    return root


def _apply_config_file(args: argparse.Namespace) -> None:
    """Fill unset args from the JSON config file, if one was given.

    A value from the file applies only when the flag still holds its
    parser default, so explicit flags always win."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.is_file():
        raise KgsumError(f"config file {path} does not exist")
    overrides = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(overrides, dict):
        raise KgsumError("config file must hold a JSON object")
    subparser = args._subparser
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr.startswith("_"):
            raise KgsumError(f"config file sets unknown option {key!r}")
        if subparser.get_default(attr) == getattr(args, attr):
            setattr(args, attr, value)


def _run_config(args, keys: list[str]) -> dict:
    cfg = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    cfg["package_version"] = __version__
    return cfg


# --------------------------------------------------------------- subcommands


def _cmd_make_corpus(args) -> int:
    from kgsum.synthetic import SyntheticSpec, generate_corpus

    spec = SyntheticSpec(
        dbpedia_entities=args.dbpedia_entities,
        lmdb_entities=args.lmdb_entities,
        dbpedia_triples=args.dbpedia_triples,
        lmdb_triples=args.lmdb_triples,
        seed=args.seed,
    )
    generate_corpus(args.out, spec)
    print(f"wrote synthetic corpus to {args.out}")
    return 0


def _cmd_dump(args) -> int:
    dataset = load_dataset(_data_root(args))
    blob = json.dumps(dataset.to_json(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(blob + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(blob)
    return 0


def _cmd_pretrain(args) -> int:
    dataset = load_dataset(_data_root(args))
    config = TransEConfig(
        dim=args.dim,
        margin=args.margin,
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    triples = [t for e in dataset.entities for t in e.triples]
    emb = train_transe(triples, dataset.vocab, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "embeddings.npz"
    save_embeddings(path, emb)
    (out / "pretrain_config.json").write_text(
        json.dumps(
            _run_config(args, ["data", "dim", "margin", "lr", "epochs", "batch_size", "seed"])
            | {"corpus_digest": dataset.digest(), "vocab_digest": dataset.vocab.digest()},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    final = emb.loss_history[-1] if emb.loss_history else float("nan")
    print(f"wrote {path} (final epoch loss {final:.4f})")
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(_data_root(args))
    emb = load_embeddings(args.embeddings, expected_vocab_digest=dataset.vocab.digest())
    config = TrainConfig(
        epochs=args.epochs,
        layers=1 if args.variant == "a5" else args.layers,
        word_dim=args.word_dim,
        graph_dim=emb.entity.shape[1],
        hidden=args.hidden,
        user_hidden=args.user_hidden,
        variant=args.variant,
        learning_rate=args.lr,
        seed=args.seed,
    )
    run = train_cv(dataset, emb, config, jobs=args.jobs)
    out = Path(args.out)
    save_cv_run(out, run, dataset)
    (out / "run_config.json").write_text(
        json.dumps(
            {"train_config": config.to_json(), "corpus_digest": dataset.digest(),
             "package_version": __version__},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    best = {r.round_index: r.best_epoch for r in run.folds}
    print(f"wrote 5 fold checkpoints to {out} (best epochs {best})")
    return 0


def _parse_k_list(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.split(",") if part)
    except ValueError as exc:
        raise KgsumError(f"invalid k list {text!r}") from exc
    if not ks:
        raise KgsumError("empty k list")
    return ks


def _cmd_eval(args) -> int:
    dataset = load_dataset(_data_root(args))
    k_values = _parse_k_list(args.k)
    per_seed = []
    for ckpt_dir in args.checkpoints:
        models, fold_map, train_config = load_fold_models(ckpt_dir, dataset)
        per_seed.append(
            out_of_fold_scores(
                dataset, models, fold_map, seed=train_config.seed, k_values=k_values
            )
        )
    name = args.name
    scores = per_seed[0] if len(per_seed) == 1 else mean_scores_over_seeds(per_seed, name)
    scores.name = name

    reference_scores = None
    if args.baseline_scores:
        from kgsum.report import SystemScores

        raw = json.loads(Path(args.baseline_scores).read_text(encoding="utf-8"))
        reference_scores = SystemScores(
            name=raw.get("name", "reference"),
            scores={
                m: {int(k): v for k, v in by_k.items()} for m, by_k in raw["scores"].items()
            },
            source=raw["source"],
        )

    from kgsum.report import load_reference_scores

    reference = load_reference_scores()
    by_lower = {k.lower(): k for k in reference["f_measure"]}
    compare = args.compare.strip().lower()
    if compare not in by_lower:
        raise KgsumError(
            f"unknown comparison system {args.compare!r}; choose from "
            + ", ".join(sorted(reference["f_measure"]))
        )
    reference["reference_system"] = by_lower[compare]
    report = build_report([scores], reference=reference, reference_per_entity=reference_scores)

    out = Path(args.out or args.checkpoints[0])
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(
            report.to_json()
            | {"corpus_digest": dataset.digest(), "k_values": list(k_values),
               "checkpoints": [str(c) for c in args.checkpoints],
               "package_version": __version__},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    text = report.render()
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _entity_model(args):
    dataset = load_dataset(_data_root(args))
    index = dataset.index_of(args.entity)
    desc = dataset.entities[index]
    models, fold_map, train_config = load_fold_models(args.checkpoints, dataset)
    model = models[fold_map[desc.entity_id]]
    return dataset, desc, model, train_config


def _cmd_summarize(args) -> int:
    dataset, desc, model, train_config = _entity_model(args)
    trace = model.forward(desc, mode="eval", seed=train_config.seed)
    summary = top_k(trace.attention, args.k, entity_id=desc.entity_id)
    if args.k > len(desc):
        print(f"# note: k={args.k} exceeds the {len(desc)} triples; showing all")
    print(f"# entity {desc.entity_id} <{desc.subject}> top-{args.k}")
    for rank, (idx, score) in enumerate(zip(summary.indices, summary.scores), start=1):
        print(f"{rank:2d}. [{score:.4f}] {to_ntriples(desc.triples[idx])}")
    return 0


def _cmd_attention(args) -> int:
    _, desc, model, train_config = _entity_model(args)
    trace = model.forward(desc, mode="eval", seed=train_config.seed)
    blob = trace.to_json()
    blob["triples"] = [to_ntriples(t) for t in desc.triples]
    text = json.dumps(blob, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgsum",
        description="Train and evaluate a neural entity summarizer over RDF descriptions.",
    )
    parser.add_argument("--version", action="version", version=f"kgsum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--data", help="corpus root (default: $KGSUM_DATA)")
        p.add_argument("--config", help="JSON config file; flags override its values")

    p = sub.add_parser("make-corpus", help="generate a synthetic corpus in the benchmark layout")
    p.add_argument("--out", required=True)
    p.add_argument("--dbpedia-entities", type=int, default=125)
    p.add_argument("--lmdb-entities", type=int, default=50)
    p.add_argument("--dbpedia-triples", type=int, default=6800)
    p.add_argument("--lmdb-triples", type=int, default=2600)
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=_cmd_make_corpus, _subparser=p)

    p = sub.add_parser("dump", help="dump the loaded corpus as inspection JSON")
    add_common(p)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=_cmd_dump, _subparser=p)

    p = sub.add_parser("pretrain", help="pretrain graph embeddings on the whole corpus")
    add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_pretrain, _subparser=p)

    p = sub.add_parser("train", help="five-fold cross-validated training")
    add_common(p)
    p.add_argument("--embeddings", required=True, help="embeddings checkpoint from pretrain")
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--layers", type=int, default=6)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--word-dim", type=int, default=100)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--user-hidden", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--jobs", type=int, default=None, help="parallel fold workers")
    p.set_defaults(func=_cmd_train, _subparser=p)

    p = sub.add_parser("eval", help="out-of-fold evaluation and comparison report")
    add_common(p)
    p.add_argument("--checkpoints", nargs="+", required=True,
                   help="one or more run directories; several are seed-averaged")
    p.add_argument("--k", default="5,10")
    p.add_argument("--name", default="this-work")
    p.add_argument("--compare", default="esa",
                   help="reference system for significance markers")
    p.add_argument("--baseline-scores",
                   help="JSON file with the reference system's per-entity scores")
    p.add_argument("--out", help="report directory (default: first checkpoint dir)")
    p.set_defaults(func=_cmd_eval, _subparser=p)

    p = sub.add_parser("summarize", help="print the top-k triples of one entity")
    add_common(p)
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--entity", required=True, help="entity id or IRI")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=_cmd_summarize, _subparser=p)

    p = sub.add_parser("attention", help="export per-layer attention for one entity")
    add_common(p)
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--entity", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_attention, _subparser=p)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except KgsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
