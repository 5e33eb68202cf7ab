import numpy as np
import pytest

from kgsum.corpus import SOURCE_DBPEDIA, SOURCE_LMDB, load_dataset
from kgsum.synthetic import SyntheticSpec, generate_corpus


def test_default_spec_mirrors_published_statistics():
    spec = SyntheticSpec()
    assert spec.dbpedia_entities == 125
    assert spec.lmdb_entities == 50
    assert spec.dbpedia_triples == 6800
    assert spec.lmdb_triples == 2600


def test_incompatible_totals_rejected():
    with pytest.raises(ValueError):
        SyntheticSpec(dbpedia_entities=10, dbpedia_triples=10)  # below min per entity


def test_generation_is_deterministic(tmp_path):
    spec = SyntheticSpec(dbpedia_entities=5, lmdb_entities=3, dbpedia_triples=150, lmdb_triples=90, seed=9)
    generate_corpus(tmp_path / "a", spec)
    generate_corpus(tmp_path / "b", spec)
    a = load_dataset(tmp_path / "a")
    b = load_dataset(tmp_path / "b")
    assert a.digest() == b.digest()


def test_gold_files_are_verbatim_description_lines(tmp_path):
    spec = SyntheticSpec(dbpedia_entities=5, lmdb_entities=3, dbpedia_triples=150, lmdb_triples=90, seed=9)
    generate_corpus(tmp_path, spec)
    desc_lines = set((tmp_path / "dbpedia" / "1" / "1_desc.nt").read_text().splitlines())
    for user in range(5):
        gold = (tmp_path / "dbpedia" / "1" / f"1_gold_top5_{user}.nt").read_text().splitlines()
        assert len(gold) == 5
        assert set(gold) <= desc_lines


def test_annotators_prefer_core_and_topic_predicates(synth_dataset):
    # group structure: housekeeping links should be under-selected
    detail_words = {"externalLink", "seeAlso", "sameAs", "comment", "depiction", "wikiPage"}
    selected_detail = 0
    selected_total = 0
    for desc, gold in zip(synth_dataset.entities, synth_dataset.golds):
        for sel in gold.per_user_top5:
            for i in sel:
                selected_total += 1
                word = desc.triples[i].predicate.rsplit("/", 1)[-1]
                if word in detail_words:
                    selected_detail += 1
    assert selected_detail / selected_total < 0.25


def test_elist_consistent_with_directories(synth_root, synth_dataset):
    lines = (synth_root / "elist.txt").read_text().splitlines()[1:]
    assert len(lines) == len(synth_dataset)
    db = synth_dataset.source_ids(SOURCE_DBPEDIA)
    lm = synth_dataset.source_ids(SOURCE_LMDB)
    assert len(db) == 8 and len(lm) == 4
    assert set(int(e) for e in db) == set(range(1, 9))
    assert set(int(e) for e in lm) == set(range(9, 13))
