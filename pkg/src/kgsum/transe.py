"""Translational graph-embedding pretraining (TransE).

Trains entity/relation tables with the margin-ranking objective
``max(0, margin + d(h + r, t) - d(h' + r, t'))`` under uniform corruption
of either the head or the tail, with L2 distance.  Only statements whose
object is an IRI take part: literals carry no graph identity and resolve
to the all-zero out-of-vocabulary row instead (their content still enters
the model through word embeddings).

Defaults follow the original method: 100 dimensions, margin 1.0,
learning rate 0.01, 500 epochs, entity rows projected back onto the unit
ball at the start of every epoch.  The tables are frozen after
pretraining; downstream training never updates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kgsum.corpus import Vocabulary
from kgsum.errors import ContractError, DimensionError
from kgsum.rdf import IRI, Literal, Triple

__all__ = [
    "TransEConfig",
    "GraphEmbeddings",
    "transe_score",
    "graph_triples",
    "train_transe",
    "filtered_mean_rank",
]


@dataclass(frozen=True)
class TransEConfig:
    dim: int = 100
    margin: float = 1.0
    lr: float = 0.01
    epochs: int = 500
    batch_size: int = 256
    seed: int = 7


@dataclass
class GraphEmbeddings:
    """Frozen lookup tables; the last row of each table is the all-zero
    out-of-vocabulary vector."""

    entity: np.ndarray
    relation: np.ndarray
    config: TransEConfig
    vocab_digest: str
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not np.isfinite(self.entity).all() or not np.isfinite(self.relation).all():
            raise ContractError("graph embeddings contain non-finite values")

    def entity_vector(self, term: IRI | Literal | str, vocab: Vocabulary) -> np.ndarray:
        if isinstance(term, Literal):
            return self.entity[vocab.entity_oov]
        iri = term.value if isinstance(term, IRI) else term
        return self.entity[vocab.entity_id(iri)]

    def relation_vector(self, iri: str, vocab: Vocabulary) -> np.ndarray:
        return self.relation[vocab.relation_id(iri)]


def transe_score(h: np.ndarray, r: np.ndarray, t: np.ndarray) -> float:
    """L2 distance between the translated head ``h + r`` and the tail."""
    h, r, t = (np.asarray(x, dtype=np.float64) for x in (h, r, t))
    if not (h.shape == r.shape == t.shape):
        raise DimensionError(f"transe_score: shapes {h.shape}, {r.shape}, {t.shape} differ")
    return float(np.linalg.norm(h + r - t))


def graph_triples(triples: list[Triple], vocab: Vocabulary) -> np.ndarray:
    """(head, relation, tail) id rows for every IRI-object statement."""
    rows = [
        (vocab.entity_id(t.subject), vocab.relation_id(t.predicate), vocab.entity_id(t.object.value))
        for t in triples
        if isinstance(t.object, IRI)
    ]
    return np.asarray(rows, dtype=np.intp).reshape(-1, 3)


def _init_tables(rng: np.random.Generator, vocab: Vocabulary, dim: int) -> tuple[np.ndarray, np.ndarray]:
    bound = 6.0 / np.sqrt(dim)
    entity = rng.uniform(-bound, bound, size=(vocab.n_entities, dim))
    relation = rng.uniform(-bound, bound, size=(vocab.n_relations, dim))
    entity[vocab.entity_oov] = 0.0
    relation[vocab.relation_oov] = 0.0
    norms = np.linalg.norm(relation[: vocab.relation_oov], axis=1, keepdims=True)
    relation[: vocab.relation_oov] /= np.maximum(norms, 1e-12)
    return entity, relation


def _project_to_unit_ball(entity: np.ndarray, n_real: int) -> None:
    norms = np.linalg.norm(entity[:n_real], axis=1, keepdims=True)
    np.divide(entity[:n_real], norms, where=norms > 1.0, out=entity[:n_real])


def train_transe(
    triples: list[Triple], vocab: Vocabulary, config: TransEConfig = TransEConfig()
) -> GraphEmbeddings:
    """Pretrain graph embeddings over the whole corpus triple set.

    Deterministic for a fixed seed; ``epochs=0`` returns the seeded random
    initialization untouched.
    """
    ids = graph_triples(triples, vocab)
    if ids.shape[0] == 0:
        raise ContractError("no IRI-object triples to pretrain on")
    rng = np.random.default_rng(config.seed)
    entity, relation = _init_tables(rng, vocab, config.dim)
    n_real = vocab.entity_oov
    history: list[float] = []

    for _ in range(config.epochs):
        _project_to_unit_ball(entity, n_real)
        order = rng.permutation(ids.shape[0])
        epoch_loss = 0.0
        for start in range(0, ids.shape[0], config.batch_size):
            batch = ids[order[start : start + config.batch_size]]
            h, r, t = batch[:, 0], batch[:, 1], batch[:, 2]
            corrupt_head = rng.random(batch.shape[0]) < 0.5
            neg = rng.integers(0, n_real, size=batch.shape[0])
            nh = np.where(corrupt_head, neg, h)
            nt = np.where(corrupt_head, t, neg)

            pos_vec = entity[h] + relation[r] - entity[t]
            neg_vec = entity[nh] + relation[r] - entity[nt]
            pos_d = np.linalg.norm(pos_vec, axis=1)
            neg_d = np.linalg.norm(neg_vec, axis=1)
            viol = config.margin + pos_d - neg_d > 0.0
            epoch_loss += float(np.maximum(0.0, config.margin + pos_d - neg_d).sum())
            if not viol.any():
                continue

            u_pos = pos_vec[viol] / np.maximum(pos_d[viol, None], 1e-12)
            u_neg = neg_vec[viol] / np.maximum(neg_d[viol, None], 1e-12)
            de = np.zeros_like(entity)
            dr = np.zeros_like(relation)
            np.add.at(de, h[viol], u_pos)
            np.add.at(de, t[viol], -u_pos)
            np.add.at(dr, r[viol], u_pos - u_neg)
            np.add.at(de, nh[viol], -u_neg)
            np.add.at(de, nt[viol], u_neg)
            entity -= config.lr * de
            relation -= config.lr * dr
            entity[vocab.entity_oov] = 0.0
            relation[vocab.relation_oov] = 0.0
        history.append(epoch_loss / ids.shape[0])

    if config.epochs > 0:
        _project_to_unit_ball(entity, n_real)
    return GraphEmbeddings(entity, relation, config, vocab.digest(), history)


def filtered_mean_rank(
    entity: np.ndarray, relation: np.ndarray, ids: np.ndarray, n_real: int
) -> float:
    """Brute-force filtered ranking of every true tail.

    For each statement, all real entities are scored as candidate tails;
    candidates that complete another true statement with the same head and
    relation are ignored.  Returns the mean 1-based rank of the true tail.
    """
    if ids.shape[0] == 0:
        raise ContractError("no statements to rank")
    true_tails: dict[tuple[int, int], set[int]] = {}
    for h, r, t in ids:
        true_tails.setdefault((int(h), int(r)), set()).add(int(t))

    candidates = entity[:n_real]
    ranks = np.empty(ids.shape[0])
    for i, (h, r, t) in enumerate(ids):
        query = entity[h] + relation[r]
        d = np.linalg.norm(candidates - query, axis=1)
        others = true_tails[(int(h), int(r))] - {int(t)}
        if others:
            d[list(others)] = np.inf
        ranks[i] = 1 + int((d < d[t]).sum())
    return float(ranks.mean())
