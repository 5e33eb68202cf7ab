"""Small end-to-end run: cross-validated training and the comparison report.

Uses a reduced configuration so the whole script finishes in well under a
minute; the full-scale setup (100-dim embeddings, 6 layers, 200 epochs,
seeds averaged) is what the published numbers use.
"""

import tempfile
from pathlib import Path

from kgsum.corpus import load_dataset
from kgsum.pipeline import out_of_fold_scores, save_cv_run, load_fold_models, train_cv
from kgsum.report import build_report
from kgsum.synthetic import SyntheticSpec, generate_corpus
from kgsum.training import TrainConfig
from kgsum.transe import TransEConfig, train_transe

workdir = Path(tempfile.mkdtemp(prefix="kgsum_demo_"))
root = workdir / "corpus"
generate_corpus(root, SyntheticSpec(
    dbpedia_entities=10, lmdb_entities=5, dbpedia_triples=360, lmdb_triples=180, seed=7
))
dataset = load_dataset(root)
graph = train_transe(
    [t for e in dataset.entities for t in e.triples], dataset.vocab,
    TransEConfig(dim=16, epochs=50, seed=3),
)

config = TrainConfig(
    epochs=25, layers=2, word_dim=16, graph_dim=16, hidden=8, user_hidden=8,
    learning_rate=3e-3, seed=1,
)
print("training 5 folds (reduced configuration)...")
run = train_cv(dataset, graph, config)
for result in run.folds:
    best = next(r for r in result.log if r.epoch == result.best_epoch)
    print(f"  fold {result.round_index}: best epoch {result.best_epoch} "
          f"(val F5={best.val_f5:.3f}, F10={best.val_f10:.3f})")

out = workdir / "run"
save_cv_run(out, run, dataset)
print(f"checkpoints + train_log.jsonl written to {out}")

# strictly out-of-fold: each entity is scored by the model that never saw it
models, fold_map, _ = load_fold_models(out, dataset, graph)
scores = out_of_fold_scores(dataset, models, fold_map, seed=config.seed)
report = build_report([scores])
print()
print(report.render())
print("\n(a reduced synthetic run is not expected to reach the published rows above)")
