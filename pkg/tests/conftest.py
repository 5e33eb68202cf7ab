import numpy as np
import pytest

from kgsum.corpus import Dataset, EntityDescription, GoldAnnotation, gold_attention, pooled_counts
from kgsum.model import ModelConfig, Summarizer
from kgsum.rdf import IRI, Literal, Triple
from kgsum.transe import GraphEmbeddings, TransEConfig


def toy_entity(entity_id: str, n: int, source: str = "DBpedia") -> EntityDescription:
    """A small hand-built description with a mix of IRI and literal objects."""
    subject = f"http://toy/s{entity_id}"
    triples = []
    for i in range(n):
        if i % 3 == 2:
            obj = Literal(f"value {entity_id}.{i}")
        else:
            obj = IRI(f"http://toy/o{i % 4}")
        triples.append(Triple(subject, f"http://toy/p{i % 5}", obj))
    return EntityDescription(entity_id=entity_id, subject=subject, triples=tuple(triples), source=source)


def toy_gold(desc: EntityDescription, rng: np.random.Generator) -> GoldAnnotation:
    n = len(desc)
    k5, k10 = min(5, n), min(10, n)
    top5 = tuple(tuple(sorted(rng.choice(n, size=k5, replace=False).tolist())) for _ in range(5))
    top10 = tuple(tuple(sorted(rng.choice(n, size=k10, replace=False).tolist())) for _ in range(5))
    counts = pooled_counts(top5, top10, n)
    return GoldAnnotation(
        entity_id=desc.entity_id,
        per_user_top5=top5,
        per_user_top10=top10,
        counts=counts,
        gold_attention=gold_attention(counts),
    )


def toy_target(n: int, rng: np.random.Generator) -> np.ndarray:
    """A random attention target over n triples (for synthetic grad checks)."""
    counts = rng.integers(0, 6, size=n)
    counts[int(rng.integers(n))] += 1  # at least one selection
    return counts / counts.sum()


def boost_params(model, gain_tables: float = 3.0, gain_weights: float = 3.0) -> None:
    """Scale a freshly initialized model into an O(1)-activation regime.

    Finite-difference gradient checks need every parameter's gradient to
    sit well above the difference-quotient noise floor; default
    initialization leaves the cascaded bilinear scores (and hence deep
    gradients) many orders of magnitude too small on tiny models.
    """
    for name in model.store.names():
        if name == "word_table" or name.startswith("graph_"):
            model.store.params[name] *= gain_tables
        elif model.store.trainable[name] and not name.endswith("_b"):
            model.store.params[name] *= gain_weights


def tiny_model(
    vocab,
    n_max: int,
    layers: int = 2,
    variant: str = "full",
    seed: int = 0,
    word_dim: int = 5,
    graph_dim: int = 5,
    hidden: int = 8,
    user_hidden: int = 8,
) -> Summarizer:
    rng = np.random.default_rng(seed)
    entity_table = rng.normal(0, 0.3, size=(vocab.n_entities, graph_dim))
    entity_table[vocab.entity_oov] = 0.0
    relation_table = rng.normal(0, 0.3, size=(vocab.n_relations, graph_dim))
    relation_table[vocab.relation_oov] = 0.0
    graph = GraphEmbeddings(
        entity=entity_table,
        relation=relation_table,
        config=TransEConfig(dim=graph_dim, epochs=0),
        vocab_digest=vocab.digest(),
    )
    config = ModelConfig(
        n_max=n_max,
        word_dim=word_dim,
        graph_dim=graph_dim,
        hidden=hidden,
        user_hidden=user_hidden,
        layers=layers,
        variant=variant,
    )
    return Summarizer(config, vocab, graph, np.random.default_rng(seed + 1))


@pytest.fixture
def toy_dataset() -> Dataset:
    rng = np.random.default_rng(0)
    entities = [toy_entity(str(i + 1), n) for i, n in enumerate([12, 11, 15, 10, 13, 14])]
    golds = [toy_gold(e, rng) for e in entities]
    return Dataset(entities, golds)


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory):
    from kgsum.synthetic import SyntheticSpec, generate_corpus

    root = tmp_path_factory.mktemp("session_synth")
    generate_corpus(
        root,
        SyntheticSpec(
            dbpedia_entities=8,
            lmdb_entities=4,
            dbpedia_triples=280,
            lmdb_triples=140,
            seed=5,
        ),
    )
    return root


@pytest.fixture(scope="session")
def synth_dataset(synth_root):
    from kgsum.corpus import load_dataset

    return load_dataset(synth_root)


@pytest.fixture(scope="session")
def synth_graph(synth_dataset):
    from kgsum.transe import TransEConfig, train_transe

    triples = [t for e in synth_dataset.entities for t in e.triples]
    return train_transe(triples, synth_dataset.vocab, TransEConfig(dim=16, epochs=40, seed=3))


SMALL_TRAIN_KW = dict(
    word_dim=16,
    graph_dim=16,
    hidden=8,
    user_hidden=8,
    layers=2,
    learning_rate=3e-3,
)
