"""One forward pass, phase by phase.

Builds a summarizer over a small corpus and walks a single entity through
input representation, the extractor BiLSTM, the multi-aspect scores, the
user-phase weighting, and the final attention distribution.
"""

import tempfile

import numpy as np

from kgsum.corpus import load_dataset
from kgsum.metrics import top_k
from kgsum.model import ModelConfig, Summarizer
from kgsum.rdf import to_ntriples
from kgsum.synthetic import SyntheticSpec, generate_corpus
from kgsum.transe import TransEConfig, train_transe

root = tempfile.mkdtemp(prefix="kgsum_demo_") + "/corpus"
generate_corpus(root, SyntheticSpec(
    dbpedia_entities=6, lmdb_entities=3, dbpedia_triples=210, lmdb_triples=100, seed=1
))
dataset = load_dataset(root)
graph = train_transe(
    [t for e in dataset.entities for t in e.triples], dataset.vocab,
    TransEConfig(dim=16, epochs=40, seed=4),
)

config = ModelConfig(
    n_max=dataset.n_max, word_dim=16, graph_dim=16, hidden=8, user_hidden=8, layers=3
)
model = Summarizer(config, dataset.vocab, graph, np.random.default_rng(0))
print(f"model holds {model.store.n_params()} parameters "
      f"({sum(model.store.params[n].size for n in model.store.trainable_names())} trainable)")

desc = dataset.entities[0]
n = len(desc)
print(f"\nentity {desc.entity_id}: {n} triples")

reprs = model.represent(desc)
print(f"input representation: {reprs.value.shape} = "
      f"[word(p) | graph(p) | word(o) | graph(o)] per triple")

trace = model.forward(desc, mode="eval", seed=0)
print(f"\ntriples were encoded in randomized order: {trace.triple_order.tolist()}")
print(f"per-layer scores (shape {trace.scores.shape}), one simulated user per layer:")
for j, row in enumerate(trace.scores):
    print(f"  user {j}: {[round(v, 3) for v in row[:6]]} ...")

print(f"\nuser weights (raw bilinear scores, no normalization): "
      f"{[round(v, 4) for v in trace.preference_weights]}")
print(f"final attention sums to {trace.attention.sum():.12f}")

summary = top_k(trace.attention, 5, entity_id=desc.entity_id)
print("\ntop-5 before any training (expect noise):")
for rank, (i, s) in enumerate(zip(summary.indices, summary.scores), start=1):
    print(f"  {rank}. [{s:.4f}] {to_ntriples(desc.triples[i])[:100]}")

# the trace is JSON-exportable for external plotting
blob = trace.to_json()
print(f"\nexportable trace keys: {sorted(blob)}")
