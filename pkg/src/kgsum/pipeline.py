"""End-to-end orchestration: pretrain, cross-validated training, strictly
out-of-fold evaluation, and multi-seed aggregation.

Each entity is scored only by the model of the round that held it out as
test data; the entity-to-fold map travels inside every checkpoint so the
evaluator can enforce this structurally.  Rounds are independent given
the fold plan and train concurrently in worker processes (``KGSUM_JOBS``
overrides the worker count; determinism does not depend on scheduling
because every round seeds its own generator).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kgsum.checkpoint import load_embeddings, load_model, save_model
from kgsum.corpus import Dataset
from kgsum.errors import ContractError, IntegrityError
from kgsum.metrics import average_precision, f_measure, top_k
from kgsum.model import ModelConfig, Summarizer
from kgsum.report import SystemScores
from kgsum.training import FoldPlan, FoldResult, N_FOLDS, TrainConfig, five_fold_split, train_fold
from kgsum.transe import GraphEmbeddings

__all__ = [
    "CvRun",
    "train_cv",
    "save_cv_run",
    "load_fold_models",
    "out_of_fold_scores",
    "mean_scores_over_seeds",
]


@dataclass
class CvRun:
    """Results of one five-fold training run."""

    plan: FoldPlan
    config: TrainConfig
    folds: list[FoldResult] = field(default_factory=list)

    def fold_map(self) -> dict[str, int]:
        return self.plan.fold_of()


def _train_one(args) -> FoldResult:
    dataset, graph, plan, round_index, config = args
    return train_fold(dataset, graph, plan, round_index, config)


def train_cv(
    dataset: Dataset,
    graph: GraphEmbeddings,
    config: TrainConfig,
    jobs: int | None = None,
) -> CvRun:
    """Train all five rounds; rounds run in parallel worker processes
    when more than one job is allowed."""
    if graph.vocab_digest != dataset.vocab.digest():
        raise IntegrityError(
            "stale embeddings: vocabulary digest does not match the corpus; re-run pretraining"
        )
    plan = five_fold_split([e.entity_id for e in dataset.entities], config.seed)
    run = CvRun(plan=plan, config=config)
    if jobs is None:
        jobs = int(os.environ.get("KGSUM_JOBS", "0")) or min(N_FOLDS, os.cpu_count() or 1)
    tasks = [(dataset, graph, plan, r, config) for r in range(N_FOLDS)]
    if jobs <= 1:
        run.folds = [_train_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            run.folds = list(pool.map(_train_one, tasks))
    return run


def save_cv_run(out_dir: str | os.PathLike, run: CvRun, dataset: Dataset) -> None:
    """Write per-round checkpoints plus the line-delimited training log."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fold_map = run.fold_map()
    for result in run.folds:
        save_model(
            out / f"fold{result.round_index}.ckpt.npz",
            result.params,
            model_config=run.config.model_config(dataset.n_max).to_json(),
            train_config=run.config.to_json(),
            vocab_digest=dataset.vocab.digest(),
            corpus_digest=dataset.digest(),
            fold_map=fold_map,
            round_index=result.round_index,
            best_epoch=result.best_epoch,
        )
    log = "\n".join(result.log_lines() for result in run.folds if result.log)
    (out / "train_log.jsonl").write_text(log + ("\n" if log else ""), encoding="utf-8")


def load_fold_models(
    checkpoint_dir: str | os.PathLike, dataset: Dataset, graph: GraphEmbeddings | None = None
) -> tuple[dict[int, Summarizer], dict[str, int], TrainConfig]:
    """Rebuild one summarizer per round from a checkpoint directory.

    Checkpoints carry the frozen graph tables, so no separate embeddings
    artifact is needed (one may be passed to skip reconstructing them).
    Every round's checkpoint must be present (no silent partial
    evaluations) and match the corpus digest.
    """
    ckpt_dir = Path(checkpoint_dir)
    models: dict[int, Summarizer] = {}
    fold_map: dict[str, int] | None = None
    train_config: TrainConfig | None = None
    vocab_digest = dataset.vocab.digest()
    for round_index in range(N_FOLDS):
        path = ckpt_dir / f"fold{round_index}.ckpt.npz"
        header, tensors = load_model(path, expected_vocab_digest=vocab_digest)
        if header["corpus_digest"] != dataset.digest():
            raise IntegrityError(f"{path}: corpus digest mismatch")
        config = ModelConfig.from_json(header["model_config"])
        fold_graph = graph
        if fold_graph is None:
            from kgsum.transe import TransEConfig

            fold_graph = GraphEmbeddings(
                entity=tensors["graph_entity"],
                relation=tensors["graph_relation"],
                config=TransEConfig(dim=config.graph_dim, epochs=0),
                vocab_digest=header["vocab_digest"],
            )
        model = Summarizer(config, dataset.vocab, fold_graph, np.random.default_rng(0))
        model.store.load_state_dict(tensors)
        models[round_index] = model
        if fold_map is None:
            fold_map = {k: int(v) for k, v in header["fold_map"].items()}
            train_config = TrainConfig.from_json(header["train_config"])
        elif {k: int(v) for k, v in header["fold_map"].items()} != fold_map:
            raise IntegrityError("checkpoints disagree on the fold plan")
    assert fold_map is not None and train_config is not None
    missing = [e.entity_id for e in dataset.entities if e.entity_id not in fold_map]
    if missing:
        raise IntegrityError(f"fold map does not cover entities: {missing[:5]}")
    return models, fold_map, train_config


def out_of_fold_scores(
    dataset: Dataset,
    models: dict[int, Summarizer],
    fold_map: dict[str, int],
    seed: int,
    name: str = "this-work",
    k_values: tuple[int, ...] = (5, 10),
) -> SystemScores:
    """Per-entity F@k and AP@k, each entity scored by the model of the
    round that never saw it in training."""
    scores: dict[str, dict[int, dict[str, float]]] = {
        "f_measure": {k: {} for k in k_values},
        "map": {k: {} for k in k_values},
    }
    source: dict[str, str] = {}
    for desc, gold in zip(dataset.entities, dataset.golds):
        eid = desc.entity_id
        round_index = fold_map[eid]
        model = models[round_index]
        trace = model.forward(desc, mode="eval", seed=seed)
        source[eid] = "dbpedia" if desc.source == "DBpedia" else "lmdb"
        for k in k_values:
            summary = top_k(trace.attention, k, entity_id=eid)
            gold_sets = gold.gold_sets(k)
            scores["f_measure"][k][eid] = float(
                np.mean([f_measure(summary.indices, set(g)) for g in gold_sets])
            )
            scores["map"][k][eid] = float(
                np.mean([average_precision(summary.indices, set(g)) for g in gold_sets])
            )
    return SystemScores(name=name, scores=scores, source=source)


def mean_scores_over_seeds(per_seed: list[SystemScores], name: str) -> SystemScores:
    """Average per-entity scores across seeds (seeded repetitions of the
    whole cross-validation run)."""
    if not per_seed:
        raise ContractError("no seed runs to average")
    base = per_seed[0]
    merged: dict[str, dict[int, dict[str, float]]] = {}
    for metric, by_k in base.scores.items():
        merged[metric] = {}
        for k, per_entity in by_k.items():
            merged[metric][k] = {
                eid: float(np.mean([run.scores[metric][k][eid] for run in per_seed]))
                for eid in per_entity
            }
    return SystemScores(name=name, scores=merged, source=dict(base.source))
