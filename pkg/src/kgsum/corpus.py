"""Benchmark corpus loading: entity descriptions, gold summaries, vocabularies.

Expected directory layout (the layout of the public entity-summarization
benchmark releases; any corpus matching it loads)::

    root/
      elist.txt                       optional TSV: entity id, entity IRI, source
      dbpedia/<eid>/<eid>_desc.nt             description triples, file order
      dbpedia/<eid>/<eid>_gold_top5_<u>.nt    u = 0..4, five triples each
      dbpedia/<eid>/<eid>_gold_top10_<u>.nt   u = 0..4, ten triples each
      lmdb/<eid>/...                          same shape for the movie half

When ``elist.txt`` is absent the two source directories are scanned and
entity ids are ordered numerically.  Sources are reported as ``DBpedia``
(``dbpedia/``) and ``LinkedMDB`` (``lmdb/``).

Gold files repeat description statements, so gold triples are matched to
description indices by (predicate IRI, whitespace-normalized object); the
subject is constant within a description.  Each user contributes one top-5
and one top-10 selection; selection counts pool both tasks, so a triple is
counted at most 10 times (5 users x 2 tasks).
"""

from __future__ import annotations

import difflib
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kgsum.errors import ContractError, IntegrityError, LoadError, LookupError_
from kgsum.rdf import IRI, Literal, Triple, extract_word, normalize_space, parse_ntriples

__all__ = [
    "SOURCE_DBPEDIA",
    "SOURCE_LMDB",
    "EntityDescription",
    "GoldAnnotation",
    "Vocabulary",
    "Dataset",
    "gold_attention",
    "pooled_counts",
    "build_vocab",
    "load_dataset",
    "USERS_PER_ENTITY",
    "GOLD_SIZES",
]

SOURCE_DBPEDIA = "DBpedia"
SOURCE_LMDB = "LinkedMDB"
_DIR_TO_SOURCE = {"dbpedia": SOURCE_DBPEDIA, "lmdb": SOURCE_LMDB}

USERS_PER_ENTITY = 5
GOLD_SIZES = (5, 10)


def _triple_key(t: Triple) -> tuple[str, str]:
    """Identity used to match gold statements against description lines."""
    obj = t.object
    value = obj.value if isinstance(obj, IRI) else obj.lexical
    return (t.predicate, normalize_space(value))


@dataclass(frozen=True)
class EntityDescription:
    """All triples returned for one entity, in canonical file order."""

    entity_id: str
    subject: str
    triples: tuple[Triple, ...]
    source: str

    def __post_init__(self) -> None:
        if not self.triples:
            raise IntegrityError(f"entity {self.entity_id}: empty description")
        if self.source not in (SOURCE_DBPEDIA, SOURCE_LMDB):
            raise IntegrityError(f"entity {self.entity_id}: unknown source {self.source!r}")
        seen: set[tuple[str, str]] = set()
        for t in self.triples:
            if t.subject != self.subject:
                raise IntegrityError(
                    f"entity {self.entity_id}: triple subject {t.subject} != {self.subject}"
                )
            key = _triple_key(t)
            if key in seen:
                raise IntegrityError(
                    f"entity {self.entity_id}: duplicate statement {key}"
                )
            seen.add(key)

    def __len__(self) -> int:
        return len(self.triples)


@dataclass(frozen=True)
class GoldAnnotation:
    """Per-user gold selections for one entity plus the derived target
    attention distribution (selection frequency, normalized)."""

    entity_id: str
    per_user_top5: tuple[tuple[int, ...], ...]
    per_user_top10: tuple[tuple[int, ...], ...]
    counts: np.ndarray
    gold_attention: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.counts)
        for sets, size in ((self.per_user_top5, 5), (self.per_user_top10, 10)):
            if len(sets) != USERS_PER_ENTITY:
                raise IntegrityError(
                    f"entity {self.entity_id}: expected {USERS_PER_ENTITY} users, got {len(sets)}"
                )
            for sel in sets:
                if len(sel) != size or len(set(sel)) != size:
                    raise IntegrityError(
                        f"entity {self.entity_id}: gold selection is not {size} distinct triples"
                    )
                if any(i < 0 or i >= n for i in sel):
                    raise IntegrityError(f"entity {self.entity_id}: gold index out of range")
        if abs(float(self.gold_attention.sum()) - 1.0) > 1e-9:
            raise IntegrityError(f"entity {self.entity_id}: gold attention does not sum to 1")

    def gold_sets(self, k: int) -> tuple[tuple[int, ...], ...]:
        if k == 5:
            return self.per_user_top5
        if k == 10:
            return self.per_user_top10
        raise ContractError(f"no gold selections for k={k}; the benchmark ships k=5 and k=10")


def pooled_counts(
    per_user_top5: tuple[tuple[int, ...], ...],
    per_user_top10: tuple[tuple[int, ...], ...],
    n: int,
) -> np.ndarray:
    """Selection frequency per triple, pooling the top-5 and top-10 tasks."""
    counts = np.zeros(n, dtype=np.int64)
    for sets in (per_user_top5, per_user_top10):
        for sel in sets:
            for i in sel:
                counts[i] += 1
    return counts


def gold_attention(counts: np.ndarray) -> np.ndarray:
    """Normalize selection counts into the target attention distribution."""
    counts = np.asarray(counts)
    if counts.size == 0 or (counts < 0).any():
        raise ContractError("counts must be a non-empty non-negative vector")
    total = counts.sum()
    if total == 0:
        raise ContractError("gold annotation selects nothing (all-zero counts)")
    return counts.astype(np.float64) / float(total)


@dataclass(frozen=True)
class Vocabulary:
    """Dense id maps for words, entity IRIs and relation IRIs.

    Ids are assigned in sorted order so two loads of the same corpus agree
    bitwise.  Each map reserves one out-of-vocabulary id at the end.
    """

    word_to_id: dict[str, int]
    entity_to_id: dict[str, int]
    relation_to_id: dict[str, int]

    @property
    def word_oov(self) -> int:
        return len(self.word_to_id)

    @property
    def entity_oov(self) -> int:
        return len(self.entity_to_id)

    @property
    def relation_oov(self) -> int:
        return len(self.relation_to_id)

    @property
    def n_words(self) -> int:
        return len(self.word_to_id) + 1

    @property
    def n_entities(self) -> int:
        return len(self.entity_to_id) + 1

    @property
    def n_relations(self) -> int:
        return len(self.relation_to_id) + 1

    def word_id(self, word: str) -> int:
        return self.word_to_id.get(word, self.word_oov)

    def entity_id(self, iri: str) -> int:
        return self.entity_to_id.get(iri, self.entity_oov)

    def relation_id(self, iri: str) -> int:
        return self.relation_to_id.get(iri, self.relation_oov)

    def digest(self) -> str:
        """Stable hash of the vocabulary, used to pair embeddings with the
        corpus they were trained on."""
        h = hashlib.sha256()
        for name, table in (
            ("w", self.word_to_id),
            ("e", self.entity_to_id),
            ("r", self.relation_to_id),
        ):
            h.update(name.encode())
            for key in sorted(table):
                h.update(key.encode("utf-8"))
                h.update(b"\x00")
        return h.hexdigest()


def build_vocab(descriptions: list[EntityDescription]) -> Vocabulary:
    """Collect every extracted word, entity IRI and relation IRI in the corpus."""
    words: set[str] = set()
    entities: set[str] = set()
    relations: set[str] = set()
    for desc in descriptions:
        entities.add(desc.subject)
        for t in desc.triples:
            relations.add(t.predicate)
            words.add(extract_word(IRI(t.predicate)))
            words.add(extract_word(t.object))
            if isinstance(t.object, IRI):
                entities.add(t.object.value)
    return Vocabulary(
        word_to_id={w: i for i, w in enumerate(sorted(words))},
        entity_to_id={e: i for i, e in enumerate(sorted(entities))},
        relation_to_id={r: i for i, r in enumerate(sorted(relations))},
    )


@dataclass
class Dataset:
    """An immutable, loaded corpus: aligned descriptions and gold annotations."""

    entities: list[EntityDescription]
    golds: list[GoldAnnotation]
    vocab: Vocabulary = field(init=False)

    def __post_init__(self) -> None:
        if len(self.entities) != len(self.golds):
            raise IntegrityError("descriptions and gold annotations are misaligned")
        self._by_id = {e.entity_id: i for i, e in enumerate(self.entities)}
        self._by_iri = {e.subject: i for i, e in enumerate(self.entities)}
        self.vocab = build_vocab(self.entities)

    def __len__(self) -> int:
        return len(self.entities)

    @property
    def n_max(self) -> int:
        return max(len(e) for e in self.entities)

    def source_ids(self, source: str) -> list[str]:
        return [e.entity_id for e in self.entities if e.source == source]

    def index_of(self, id_or_iri: str) -> int:
        if id_or_iri in self._by_id:
            return self._by_id[id_or_iri]
        if id_or_iri in self._by_iri:
            return self._by_iri[id_or_iri]
        pool = list(self._by_id) + list(self._by_iri)
        close = difflib.get_close_matches(id_or_iri, pool, n=3, cutoff=0.4)
        raise LookupError_(f"unknown entity {id_or_iri!r}", close)

    def entity(self, id_or_iri: str) -> EntityDescription:
        return self.entities[self.index_of(id_or_iri)]

    def gold(self, id_or_iri: str) -> GoldAnnotation:
        return self.golds[self.index_of(id_or_iri)]

    def to_json(self) -> dict:
        """Documented inspection dump: entity_id, triples[], gold{}."""
        out = []
        for desc, gold in zip(self.entities, self.golds):
            triples = []
            for t in desc.triples:
                if isinstance(t.object, IRI):
                    obj = {"kind": "iri", "value": t.object.value}
                else:
                    obj = {"kind": "literal", "value": t.object.lexical}
                    if t.object.datatype:
                        obj["datatype"] = t.object.datatype
                    if t.object.lang:
                        obj["lang"] = t.object.lang
                triples.append({"predicate": t.predicate, "object": obj})
            out.append(
                {
                    "entity_id": desc.entity_id,
                    "subject": desc.subject,
                    "source": desc.source,
                    "triples": triples,
                    "gold": {
                        "top5": [list(s) for s in gold.per_user_top5],
                        "top10": [list(s) for s in gold.per_user_top10],
                        "counts": gold.counts.tolist(),
                        "attention": gold.gold_attention.tolist(),
                    },
                }
            )
        return {"format_version": 1, "entities": out}

    def digest(self) -> str:
        """Stable hash of the full corpus contents."""
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _read_triples(path: Path) -> list[Triple]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    return parse_ntriples(text)


def _entity_listing(root: Path) -> list[tuple[str, str]]:
    """Return (entity_id, source_dir) pairs, from elist.txt when present,
    otherwise by scanning the source directories."""
    elist = root / "elist.txt"
    if elist.is_file():
        pairs: list[tuple[str, str]] = []
        for raw in elist.read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) < 3:
                raise LoadError(f"elist.txt: expected at least 3 columns, got {line!r}")
            eid, _iri, source = parts[0], parts[1], parts[2].lower()
            if eid.lower() == "eid":
                continue  # header row
            for key, dirname in (("linkedmdb", "lmdb"), ("lmdb", "lmdb"), ("dbpedia", "dbpedia")):
                if key in source:
                    pairs.append((eid, dirname))
                    break
            else:
                raise LoadError(f"elist.txt: unknown source {source!r} for entity {eid}")
        return pairs

    pairs = []
    for dirname in ("dbpedia", "lmdb"):
        src_dir = root / dirname
        if not src_dir.is_dir():
            continue
        names = [p.name for p in src_dir.iterdir() if p.is_dir()]
        try:
            names.sort(key=int)
        except ValueError:
            names.sort()
        pairs.extend((name, dirname) for name in names)
    return pairs


def _load_entity(root: Path, eid: str, dirname: str) -> tuple[EntityDescription, GoldAnnotation]:
    ent_dir = root / dirname / eid
    desc_path = ent_dir / f"{eid}_desc.nt"
    if not desc_path.is_file():
        raise LoadError(f"entity {eid}: missing description file {desc_path}")
    triples = _read_triples(desc_path)
    if not triples:
        raise LoadError(f"entity {eid}: description file is empty")
    desc = EntityDescription(
        entity_id=eid,
        subject=triples[0].subject,
        triples=tuple(triples),
        source=_DIR_TO_SOURCE[dirname],
    )
    index = {_triple_key(t): i for i, t in enumerate(desc.triples)}

    def gold_indices(k: int, user: int) -> tuple[int, ...]:
        path = ent_dir / f"{eid}_gold_top{k}_{user}.nt"
        if not path.is_file():
            raise LoadError(f"entity {eid}: missing gold file {path}")
        picked = []
        for t in _read_triples(path):
            key = _triple_key(t)
            if key not in index:
                raise IntegrityError(
                    f"entity {eid}: gold triple {key} not found in description"
                )
            picked.append(index[key])
        return tuple(picked)

    top5 = tuple(gold_indices(5, u) for u in range(USERS_PER_ENTITY))
    top10 = tuple(gold_indices(10, u) for u in range(USERS_PER_ENTITY))
    counts = pooled_counts(top5, top10, len(desc))
    gold = GoldAnnotation(
        entity_id=eid,
        per_user_top5=top5,
        per_user_top10=top10,
        counts=counts,
        gold_attention=gold_attention(counts),
    )
    return desc, gold


def load_dataset(root: str | os.PathLike) -> Dataset:
    """Load a corpus following the layout documented in this module.

    Raises :class:`~kgsum.errors.LoadError` when the root or a required
    file is missing, and :class:`~kgsum.errors.IntegrityError` when a gold
    triple cannot be matched to its description.
    """
    root = Path(root)
    if not root.is_dir():
        raise LoadError(f"corpus root {root} is not a directory")
    listing = _entity_listing(root)
    if not listing:
        raise LoadError(f"corpus root {root} contains no entities")
    entities: list[EntityDescription] = []
    golds: list[GoldAnnotation] = []
    for eid, dirname in listing:
        desc, gold = _load_entity(root, eid, dirname)
        entities.append(desc)
        golds.append(gold)
    return Dataset(entities, golds)
