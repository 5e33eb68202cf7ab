import numpy as np
import pytest

from kgsum import corpus as co
from kgsum.errors import ContractError, IntegrityError, LoadError, LookupError_
from kgsum.rdf import IRI, Literal, Triple, parse_ntriples, to_ntriples
from kgsum.synthetic import SyntheticSpec, generate_corpus


def write_entity(root, dirname, eid, lines, gold5=None, gold10=None):
    """Write one entity directory; gold defaults to leading indices."""
    ent = root / dirname / eid
    ent.mkdir(parents=True)
    (ent / f"{eid}_desc.nt").write_text("\n".join(lines) + "\n")
    n = len(lines)
    gold5 = gold5 if gold5 is not None else list(range(5))
    gold10 = gold10 if gold10 is not None else list(range(10))
    for u in range(5):
        (ent / f"{eid}_gold_top5_{u}.nt").write_text("\n".join(lines[i] for i in gold5) + "\n")
        (ent / f"{eid}_gold_top10_{u}.nt").write_text("\n".join(lines[i] for i in gold10) + "\n")
    assert n >= 10


def desc_lines(n, subject="http://x/s"):
    return [f"<{subject}> <http://x/p{i}> <http://x/o{i}> ." for i in range(n)]


@pytest.fixture
def tiny_root(tmp_path):
    write_entity(tmp_path, "dbpedia", "1", desc_lines(12))
    write_entity(tmp_path, "lmdb", "2", desc_lines(15, subject="http://x/m"))
    return tmp_path


class TestGoldAttention:
    def test_direct_arithmetic(self):
        np.testing.assert_allclose(co.gold_attention(np.array([2, 0, 3])), [0.4, 0.0, 0.6])

    def test_uniform_counts_give_uniform_attention(self):
        np.testing.assert_allclose(co.gold_attention(np.array([1, 1, 1, 1])), [0.25] * 4)

    def test_single_selected_triple_is_one_hot(self):
        np.testing.assert_allclose(co.gold_attention(np.array([0, 0, 7])), [0.0, 0.0, 1.0])

    def test_all_zero_counts_rejected(self):
        with pytest.raises(ContractError):
            co.gold_attention(np.zeros(3, dtype=int))


class TestLoadTiny:
    def test_loads_both_halves(self, tiny_root):
        ds = co.load_dataset(tiny_root)
        assert [e.entity_id for e in ds.entities] == ["1", "2"]
        assert ds.entities[0].source == co.SOURCE_DBPEDIA
        assert ds.entities[1].source == co.SOURCE_LMDB

    def test_counts_pool_both_tasks(self, tiny_root):
        ds = co.load_dataset(tiny_root)
        gold = ds.golds[0]
        # every user picked indices 0..4 in both tasks -> count 10 each
        assert list(gold.counts[:5]) == [10] * 5
        assert list(gold.counts[5:10]) == [5] * 5
        assert gold.gold_attention.sum() == pytest.approx(1.0, abs=1e-12)

    def test_empty_root_is_load_error(self, tmp_path):
        with pytest.raises(LoadError):
            co.load_dataset(tmp_path)

    def test_missing_gold_file_names_entity(self, tmp_path):
        write_entity(tmp_path, "dbpedia", "9", desc_lines(11))
        (tmp_path / "dbpedia" / "9" / "9_gold_top5_3.nt").unlink()
        with pytest.raises(LoadError, match="entity 9"):
            co.load_dataset(tmp_path)

    def test_gold_triple_not_in_description_is_integrity_error(self, tmp_path):
        lines = desc_lines(11)
        write_entity(tmp_path, "dbpedia", "7", lines)
        rogue = "<http://x/s> <http://x/other> <http://x/nowhere> ."
        (tmp_path / "dbpedia" / "7" / "7_gold_top5_0.nt").write_text(
            "\n".join(lines[:4] + [rogue]) + "\n"
        )
        with pytest.raises(IntegrityError, match="entity 7"):
            co.load_dataset(tmp_path)

    def test_gold_matching_survives_whitespace_differences(self, tmp_path):
        lines = desc_lines(10) + ['<http://x/s> <http://x/name> "New  York" .']
        write_entity(tmp_path, "dbpedia", "3", lines, gold5=[0, 1, 2, 3, 10])
        alt = '<http://x/s> <http://x/name> "New York" .'
        (tmp_path / "dbpedia" / "3" / "3_gold_top5_0.nt").write_text(
            "\n".join(lines[:4] + [alt]) + "\n"
        )
        ds = co.load_dataset(tmp_path)
        assert 10 in ds.golds[0].per_user_top5[0]

    def test_elist_controls_order_and_source(self, tiny_root):
        (tiny_root / "elist.txt").write_text(
            "eid\teuri\tdataset\n2\thttp://x/m\tlinkedmdb\n1\thttp://x/s\tdbpedia\n"
        )
        ds = co.load_dataset(tiny_root)
        assert [e.entity_id for e in ds.entities] == ["2", "1"]


class TestVocabulary:
    def test_words_deduped_and_sorted(self):
        desc = co.EntityDescription(
            entity_id="1",
            subject="http://x/s",
            triples=(
                Triple("http://x/s", "http://x/b", IRI("http://x/a")),
                Triple("http://x/s", "http://x/a", IRI("http://x/b")),
            ),
            source=co.SOURCE_DBPEDIA,
        )
        vocab = co.build_vocab([desc])
        assert vocab.word_to_id == {"a": 0, "b": 1}
        assert vocab.word_oov == 2

    def test_single_triple_entities_and_relations(self):
        desc = co.EntityDescription(
            entity_id="1",
            subject="http://x/s",
            triples=(Triple("http://x/s", "http://x/p", IRI("http://x/o")),) + tuple(
                Triple("http://x/s", f"http://x/q{i}", Literal(str(i))) for i in range(9)
            ),
            source=co.SOURCE_DBPEDIA,
        )
        vocab = co.build_vocab([desc])
        assert set(vocab.entity_to_id) == {"http://x/o", "http://x/s"}
        assert "http://x/p" in vocab.relation_to_id

    def test_oov_ids_returned_for_unknowns(self):
        vocab = co.Vocabulary({"a": 0}, {"e": 0}, {"r": 0})
        assert vocab.word_id("zzz") == vocab.word_oov
        assert vocab.entity_id("zzz") == vocab.entity_oov
        assert vocab.relation_id("zzz") == vocab.relation_oov


class TestDescriptionInvariants:
    def test_mixed_subjects_rejected(self):
        with pytest.raises(IntegrityError):
            co.EntityDescription(
                entity_id="1",
                subject="http://x/s",
                triples=(
                    Triple("http://x/s", "http://x/p", IRI("http://x/o")),
                    Triple("http://x/OTHER", "http://x/p", IRI("http://x/o2")),
                ),
                source=co.SOURCE_DBPEDIA,
            )

    def test_duplicate_statements_rejected(self):
        t = Triple("http://x/s", "http://x/p", Literal("x y"))
        dup = Triple("http://x/s", "http://x/p", Literal("x  y"))
        with pytest.raises(IntegrityError):
            co.EntityDescription("1", "http://x/s", (t, dup), co.SOURCE_DBPEDIA)


@pytest.fixture(scope="module")
def small_synthetic(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    generate_corpus(
        root,
        SyntheticSpec(
            dbpedia_entities=6,
            lmdb_entities=3,
            dbpedia_triples=200,
            lmdb_triples=90,
            seed=5,
        ),
    )
    return co.load_dataset(root)


class TestSyntheticCorpus:
    def test_sizes_match_request(self, small_synthetic):
        ds = small_synthetic
        assert len(ds.source_ids(co.SOURCE_DBPEDIA)) == 6
        assert len(ds.source_ids(co.SOURCE_LMDB)) == 3
        assert sum(len(ds.entity(e)) for e in ds.source_ids(co.SOURCE_DBPEDIA)) == 200
        assert sum(len(ds.entity(e)) for e in ds.source_ids(co.SOURCE_LMDB)) == 90

    def test_every_gold_annotation_is_well_formed(self, small_synthetic):
        for gold in small_synthetic.golds:
            assert gold.gold_attention.sum() == pytest.approx(1.0, abs=1e-9)
            assert gold.counts.max() <= 10
            assert (gold.gold_attention >= 0).all()

    def test_round_trip_of_every_triple(self, small_synthetic):
        for desc in small_synthetic.entities:
            for t in desc.triples:
                assert parse_ntriples(to_ntriples(t)) == [t]

    def test_predicate_words_never_oov(self, small_synthetic):
        # scan the whole corpus: gold-relevant predicate words resolve
        from kgsum.rdf import extract_word

        vocab = small_synthetic.vocab
        for desc in small_synthetic.entities:
            for t in desc.triples:
                assert vocab.word_id(extract_word(IRI(t.predicate))) != vocab.word_oov

    def test_two_loads_identical(self, small_synthetic, tmp_path):
        generate_corpus(
            tmp_path,
            SyntheticSpec(
                dbpedia_entities=6,
                lmdb_entities=3,
                dbpedia_triples=200,
                lmdb_triples=90,
                seed=5,
            ),
        )
        again = co.load_dataset(tmp_path)
        assert again.digest() == small_synthetic.digest()
        assert again.vocab.digest() == small_synthetic.vocab.digest()

    def test_lookup_by_iri_and_close_match_suggestions(self, small_synthetic):
        ds = small_synthetic
        first = ds.entities[0]
        assert ds.entity(first.subject).entity_id == first.entity_id
        with pytest.raises(LookupError_) as err:
            ds.index_of(first.subject + "_typo")
        assert err.value.candidates

    def test_json_dump_schema(self, small_synthetic):
        dump = small_synthetic.to_json()
        assert dump["format_version"] == 1
        ent = dump["entities"][0]
        assert set(ent) == {"entity_id", "subject", "source", "triples", "gold"}
        assert set(ent["gold"]) == {"top5", "top10", "counts", "attention"}
        assert len(ent["gold"]["top5"]) == 5
