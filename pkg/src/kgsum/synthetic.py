"""Deterministic synthetic corpus in the benchmark directory layout.

Generates entity descriptions plus five simulated annotators per entity,
so every loader, trainer and evaluator code path can run end-to-end
without the real benchmark release.  The generator mirrors the corpus
shape the loader documents: two source halves (``dbpedia/`` and
``lmdb/``), per-entity description files and per-user top-5/top-10 gold
files, and an ``elist.txt`` index.

Annotators are simulated from three preference groups over predicate
classes (identity facts, topical facts, housekeeping links), so the gold
selections correlate with predicate identity and the signal is learnable.
Objects of a relation are drawn from a relation-specific pool, which
gives the graph enough regularity for translational embeddings to beat a
random ranking.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kgsum.rdf import IRI, Literal, Triple, to_ntriples

__all__ = ["SyntheticSpec", "generate_corpus"]

_RES = "http://example.org/resource/"
_ONT = "http://example.org/ontology/"
_RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
_XSD_INT = "http://www.w3.org/2001/XMLSchema#integer"


@dataclass(frozen=True)
class _Pred:
    iri: str
    klass: str          # "core" | "topic" | "detail"
    kind: str           # "entity" | "literal" | "number" | "name"
    pool: int           # object pool size for entity-valued predicates
    max_mult: int       # max statements per entity for this predicate


def _predicates(half: str) -> list[_Pred]:
    core = [
        _Pred(_RDF_TYPE, "core", "entity", 6, 5),
        _Pred(_ONT + "name", "core", "name", 0, 1),
        _Pred(_ONT + "label", "core", "name", 0, 1),
        _Pred(_ONT + "category", "core", "entity", 10, 4),
    ]
    detail = [
        _Pred(_ONT + "externalLink", "detail", "literal", 0, 14),
        _Pred(_ONT + "seeAlso", "detail", "entity", 30, 18),
        _Pred(_ONT + "sameAs", "detail", "entity", 30, 8),
        _Pred(_ONT + "comment", "detail", "literal", 0, 5),
        _Pred(_ONT + "depiction", "detail", "literal", 0, 3),
        _Pred(_ONT + "wikiPage", "detail", "literal", 0, 10),
    ]
    if half == "dbpedia":
        topic = [
            _Pred(_ONT + "birthPlace", "topic", "entity", 12, 2),
            _Pred(_ONT + "team", "topic", "entity", 10, 8),
            _Pred(_ONT + "event", "topic", "entity", 8, 6),
            _Pred(_ONT + "goldMedalist", "topic", "entity", 12, 5),
            _Pred(_ONT + "occupation", "topic", "entity", 8, 3),
            _Pred(_ONT + "award", "topic", "entity", 10, 5),
            _Pred(_ONT + "almaMater", "topic", "entity", 10, 2),
            _Pred(_ONT + "country", "topic", "entity", 8, 2),
            _Pred(_ONT + "position", "topic", "entity", 6, 3),
            _Pred(_ONT + "yearsActive", "topic", "number", 0, 3),
        ]
    else:
        topic = [
            _Pred(_ONT + "director", "topic", "entity", 10, 3),
            _Pred(_ONT + "actor", "topic", "entity", 16, 10),
            _Pred(_ONT + "producer", "topic", "entity", 10, 3),
            _Pred(_ONT + "writer", "topic", "entity", 10, 3),
            _Pred(_ONT + "filmGenre", "topic", "entity", 8, 4),
            _Pred(_ONT + "language", "topic", "entity", 5, 2),
            _Pred(_ONT + "country", "topic", "entity", 8, 2),
            _Pred(_ONT + "runtime", "topic", "number", 0, 2),
            _Pred(_ONT + "releaseYear", "topic", "number", 0, 2),
            _Pred(_ONT + "performance", "topic", "entity", 16, 8),
        ]
    return core + topic + detail


# Preference weight per annotator group and predicate class.  Users 0-1
# follow group 0, users 2-3 group 1, user 4 group 2.
_GROUP_OF_USER = (0, 0, 1, 1, 2)
_GROUP_WEIGHTS = {
    "core": (2.0, 0.8, 0.5),
    "topic": (0.7, 1.8, 0.8),
    "detail": (0.1, 0.2, 1.3),
}
_USER_NOISE = 0.35


@dataclass(frozen=True)
class SyntheticSpec:
    """Corpus sizing; defaults mirror the published benchmark statistics."""

    dbpedia_entities: int = 125
    lmdb_entities: int = 50
    dbpedia_triples: int = 6800
    lmdb_triples: int = 2600
    min_triples: int = 20
    max_triples: int = 100
    seed: int = 13

    def __post_init__(self) -> None:
        for count, total in (
            (self.dbpedia_entities, self.dbpedia_triples),
            (self.lmdb_entities, self.lmdb_triples),
        ):
            if not (count * self.min_triples <= total <= count * self.max_triples):
                raise ValueError("triple totals incompatible with per-entity bounds")


def _sizes(rng: np.random.Generator, count: int, total: int, lo: int, hi: int) -> list[int]:
    """Per-entity triple counts in [lo, hi] summing exactly to ``total``."""
    sizes = rng.integers(lo, hi + 1, size=count)
    diff = total - int(sizes.sum())
    step = 1 if diff > 0 else -1
    i = 0
    while diff != 0:
        cand = sizes[i % count] + step
        if lo <= cand <= hi:
            sizes[i % count] = cand
            diff -= step
        i += 1
    return [int(s) for s in sizes]


def _object_pool(pred: _Pred) -> list[IRI]:
    word = pred.iri.rsplit("#", 1)[-1].rsplit("/", 1)[-1]
    return [IRI(f"{_RES}{word.capitalize()}_{j}") for j in range(pred.pool)]


def _entity_triples(
    rng: np.random.Generator,
    subject: str,
    nice_name: str,
    preds: list[_Pred],
    n: int,
) -> tuple[list[Triple], list[str]]:
    """Draw ``n`` distinct statements; returns triples and their predicate classes."""
    candidates: list[tuple[Triple, str, bool]] = []  # (triple, class, mandatory)
    for pred in preds:
        if pred.kind == "name":
            candidates.append(
                (Triple(subject, pred.iri, Literal(nice_name, lang="en")), pred.klass, True)
            )
        elif pred.kind == "entity":
            mult = min(pred.max_mult, pred.pool)
            picks = rng.choice(pred.pool, size=mult, replace=False)
            for slot, j in enumerate(picks):
                obj = _object_pool(pred)[int(j)]
                mandatory = pred.iri == _RDF_TYPE and slot == 0
                candidates.append((Triple(subject, pred.iri, obj), pred.klass, mandatory))
        elif pred.kind == "number":
            for j in range(pred.max_mult):
                value = str(int(rng.integers(1, 300)) + j)
                candidates.append(
                    (Triple(subject, pred.iri, Literal(value, datatype=_XSD_INT)), pred.klass, False)
                )
        else:  # free-text literal
            for j in range(pred.max_mult):
                text = f"{nice_name} {pred.iri.rsplit('/', 1)[-1]} {j}"
                candidates.append((Triple(subject, pred.iri, Literal(text)), pred.klass, False))

    seen: set[tuple[str, str]] = set()
    unique: list[tuple[Triple, str, bool]] = []
    for t, klass, mandatory in candidates:
        key = (t.predicate, str(t.object))
        if key not in seen:
            seen.add(key)
            unique.append((t, klass, mandatory))

    mandatory = [(t, k) for t, k, m in unique if m]
    optional = [(t, k) for t, k, m in unique if not m]
    order = rng.permutation(len(optional))
    chosen = mandatory + [optional[i] for i in order[: n - len(mandatory)]]
    if len(chosen) < n:
        raise ValueError(f"entity {subject}: only {len(chosen)} candidate statements for n={n}")
    final_order = rng.permutation(len(chosen))
    chosen = [chosen[i] for i in final_order]
    return [t for t, _ in chosen], [k for _, k in chosen]


def _simulate_users(
    rng: np.random.Generator, classes: list[str]
) -> tuple[list[list[int]], list[list[int]]]:
    n = len(classes)
    top5, top10 = [], []
    for user in range(5):
        group = _GROUP_OF_USER[user]
        utility = np.array([_GROUP_WEIGHTS[k][group] for k in classes])
        utility = utility + rng.normal(0.0, _USER_NOISE, size=n)
        ranked = list(np.argsort(-utility, kind="stable"))
        top5.append(sorted(int(i) for i in ranked[:5]))
        top10.append(sorted(int(i) for i in ranked[:10]))
    return top5, top10


def generate_corpus(root: str | Path, spec: SyntheticSpec = SyntheticSpec()) -> None:
    """Write a complete synthetic corpus below ``root``."""
    root = Path(root)
    rng = np.random.default_rng(spec.seed)
    halves = [
        ("dbpedia", "Entity", spec.dbpedia_entities, spec.dbpedia_triples, 0),
        ("lmdb", "Movie", spec.lmdb_entities, spec.lmdb_triples, spec.dbpedia_entities),
    ]
    elist_rows = []
    for dirname, label, count, total, id_offset in halves:
        preds = _predicates(dirname)
        sizes = _sizes(rng, count, total, spec.min_triples, spec.max_triples)
        for local in range(count):
            eid = str(id_offset + local + 1)
            subject = f"{_RES}{label}_{eid}"
            nice_name = f"{label} {eid}"
            triples, classes = _entity_triples(rng, subject, nice_name, preds, sizes[local])
            top5, top10 = _simulate_users(rng, classes)

            ent_dir = root / dirname / eid
            ent_dir.mkdir(parents=True, exist_ok=True)
            lines = [to_ntriples(t) for t in triples]
            (ent_dir / f"{eid}_desc.nt").write_text("\n".join(lines) + "\n", encoding="utf-8")
            for user in range(5):
                for k, sel in ((5, top5[user]), (10, top10[user])):
                    body = "\n".join(lines[i] for i in sel) + "\n"
                    (ent_dir / f"{eid}_gold_top{k}_{user}.nt").write_text(body, encoding="utf-8")
            elist_rows.append(f"{eid}\t{subject}\t{dirname}")
    (root / "elist.txt").write_text(
        "eid\teuri\tdataset\n" + "\n".join(elist_rows) + "\n", encoding="utf-8"
    )
