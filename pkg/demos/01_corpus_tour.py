"""Tour of the corpus layer: layout, parsing, gold annotations, vocabulary.

Generates a small synthetic corpus in the benchmark directory layout,
loads it, and walks through what the loader produced.  Run from the
repository root:

    python3 demos/01_corpus_tour.py
"""

import json
import tempfile
from pathlib import Path

from kgsum.corpus import load_dataset
from kgsum.rdf import parse_ntriples, to_ntriples
from kgsum.synthetic import SyntheticSpec, generate_corpus

workdir = Path(tempfile.mkdtemp(prefix="kgsum_demo_"))
root = workdir / "corpus"

spec = SyntheticSpec(
    dbpedia_entities=6, lmdb_entities=3, dbpedia_triples=210, lmdb_triples=100, seed=42
)
generate_corpus(root, spec)
print(f"corpus written to {root}")
print("layout:", sorted(p.name for p in (root / "dbpedia" / "1").iterdir()))

# the description file is plain N-Triples; parse a few statements by hand
text = (root / "dbpedia" / "1" / "1_desc.nt").read_text()
triples = parse_ntriples(text)
print(f"\nentity 1 has {len(triples)} statements; first three:")
for t in triples[:3]:
    print(" ", to_ntriples(t))

# the loader matches gold files to description indices and derives the
# target attention distribution from pooled selection counts
dataset = load_dataset(root)
print(f"\nloaded {len(dataset)} entities "
      f"({len(dataset.source_ids('DBpedia'))} DBpedia + {len(dataset.source_ids('LinkedMDB'))} LinkedMDB)")

gold = dataset.golds[0]
print("user 0 top-5 indices:", gold.per_user_top5[0])
print("selection counts:    ", gold.counts.tolist())
print("gold attention:      ", [round(a, 3) for a in gold.gold_attention.tolist()])
print("attention sums to 1: ", float(gold.gold_attention.sum()))

vocab = dataset.vocab
print(f"\nvocabulary: {vocab.n_words} words, {vocab.n_entities} entities, "
      f"{vocab.n_relations} relations (each including one reserved OOV id)")
print("word id of 'goldMedalist':", vocab.word_id("goldMedalist"))

# the dump is the documented inspection format
dump_path = workdir / "dataset.json"
dump_path.write_text(json.dumps(dataset.to_json(), indent=2)[:100000])
print(f"\ninspection dump written to {dump_path}")
print("corpus digest:", dataset.digest()[:16], "...")
