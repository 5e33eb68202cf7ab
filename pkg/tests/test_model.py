import numpy as np
import pytest

from kgsum import autodiff as ad
from kgsum.corpus import build_vocab
from kgsum.errors import ConfigError, ContractError
from kgsum.model import AttentionTrace, ModelConfig, Summarizer, apply_variant, permute
from kgsum.rdf import IRI, extract_word

from conftest import boost_params, tiny_model, toy_entity, toy_target


@pytest.fixture
def small_world():
    entities = [toy_entity(str(i + 1), n) for i, n in enumerate([3, 4, 5, 2])]
    vocab = build_vocab(entities)
    return entities, vocab


class TestPermute:
    def test_single_element(self):
        assert list(permute(1, "eval", seed=0, key="x")) == [0]

    def test_eval_mode_is_fixed_for_seed_and_key(self):
        a = permute(7, "eval", seed=3, key="e1")
        b = permute(7, "eval", seed=3, key="e1")
        np.testing.assert_array_equal(a, b)

    def test_eval_mode_differs_across_keys(self):
        perms = {tuple(permute(6, "eval", seed=3, key=f"e{i}")) for i in range(30)}
        assert len(perms) > 1

    def test_train_mode_covers_all_permutations(self):
        rng = np.random.default_rng(5)
        seen = {tuple(permute(3, "train", rng=rng)) for _ in range(1000)}
        assert len(seen) == 6

    def test_invalid_inputs(self):
        with pytest.raises(ContractError):
            permute(0, "eval", seed=0, key="x")
        with pytest.raises(ContractError):
            permute(3, "train")
        with pytest.raises(ContractError):
            permute(3, "test")


class TestConfig:
    def test_unknown_variant_rejected(self):
        with pytest.raises(ConfigError):
            ModelConfig(n_max=5, variant="a9")

    def test_apply_variant_a5_forces_single_layer(self):
        cfg = ModelConfig(n_max=5, layers=6)
        assert apply_variant("a5", cfg).layers == 1

    def test_a5_with_many_layers_rejected(self):
        with pytest.raises(ConfigError):
            ModelConfig(n_max=5, layers=6, variant="a5")

    def test_feature_dim_tracks_variant(self):
        assert ModelConfig(n_max=5, word_dim=5, graph_dim=5, hidden=8).feature_dim == 16
        assert ModelConfig(n_max=5, word_dim=5, graph_dim=5, hidden=8, variant="a1").feature_dim == 20

    def test_round_trips_through_json(self):
        cfg = ModelConfig(n_max=7, layers=3, variant="a4")
        assert ModelConfig.from_json(cfg.to_json()) == cfg


class TestRepresent:
    def test_shared_predicate_shares_first_half(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5)
        desc = entities[2]  # p indices cycle with period 5, n=5 -> distinct
        reprs = model.represent(desc).value
        assert reprs.shape == (5, model.config.repr_dim)
        # triples 0 and 3 of entity "3" share neither; build a case directly:
        e = toy_entity("9", 7)
        r = model.represent(e).value
        # predicates cycle mod 5 -> triples 0 and 5 share a predicate
        np.testing.assert_array_equal(r[0, :10], r[5, :10])

    def test_word_slice_is_the_predicate_word_vector(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5)
        desc = entities[0]
        word = extract_word(IRI(desc.triples[0].predicate))
        expected = model.store.params["word_table"][vocab.word_id(word)]
        got = model.represent(desc).value[0, : model.config.word_dim]
        np.testing.assert_array_equal(got, expected)

    def test_zero_tables_give_zero_representation(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5)
        model.store.params["word_table"][...] = 0.0
        model.store.params["graph_entity"][...] = 0.0
        model.store.params["graph_relation"][...] = 0.0
        np.testing.assert_array_equal(
            model.represent(entities[0]).value, np.zeros((3, model.config.repr_dim))
        )


class TestSimulatorPieces:
    def test_zero_weight_matrices_give_zero_scores(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=3)
        for j in range(3):
            model.store.params[f"score_W_{j}"][...] = 0.0
        trace = model.forward(entities[1], mode="eval", seed=0)
        np.testing.assert_array_equal(trace.scores, np.zeros((3, 4)))

    def test_identity_contraction(self):
        # m=1, W=I, h_i = c for all i -> every score equals |c|^2
        h = np.tile(np.arange(1.0, 5.0), (3, 1))
        c = np.arange(1.0, 5.0)
        s = ad.matmul(ad.constant(h), ad.matmul(ad.constant(np.eye(4)), ad.constant(c)))
        np.testing.assert_allclose(s.value, np.full(3, float(c @ c)))

    def test_hand_computed_scores(self):
        h = np.array([[1.0, 0.0], [0.0, 1.0]])
        c = np.array([1.0, 1.0])
        W = np.array([[1.0, 0.0], [0.0, 2.0]])
        s = ad.matmul(ad.constant(h), ad.matmul(ad.constant(W), ad.constant(c)))
        np.testing.assert_allclose(s.value, [1.0, 2.0])

    def test_simulate_users_is_identity_with_value_semantics(self):
        s = ad.constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
        u = Summarizer.simulate_users(s)
        np.testing.assert_array_equal(u.value, s.value)
        u.value[0, 0] = 99.0
        assert s.value[0, 0] == 1.0

    def test_user_attention_orthonormal_rows(self, small_world):
        _, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2)
        model.store.params["W_star"][...] = np.eye(16)
        encoded = np.zeros((2, 16))
        encoded[0, 0] = 1.0
        encoded[1, 1] = 1.0
        weights = model.user_attention(ad.constant(encoded), ad.constant(encoded[0]))
        np.testing.assert_allclose(weights.value, [1.0, 0.0])

    def test_integrate_hand_example(self):
        u = ad.constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
        a_star = ad.constant(np.array([1.0, 1.0]))
        z = Summarizer.integrate_logits(u, a_star)
        np.testing.assert_allclose(z.value, [4.0, 6.0])
        a = ad.softmax(z).value
        np.testing.assert_allclose(a, [0.11920292, 0.88079708], atol=1e-8)

    def test_integrate_uniform_when_profiles_are_zero(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2)
        for j in range(2):
            model.store.params[f"score_W_{j}"][...] = 0.0
        trace = model.forward(entities[1], mode="eval", seed=1)
        np.testing.assert_allclose(trace.attention, np.full(4, 0.25), atol=1e-12)


class TestForward:
    def test_single_triple_attention_is_one(self, small_world):
        _, vocab = small_world
        model = tiny_model(vocab, n_max=5)
        one = toy_entity("77", 1)
        trace = model.forward(one, mode="eval", seed=0)
        np.testing.assert_allclose(trace.attention, [1.0])

    def test_eval_mode_is_deterministic(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=3)
        t1 = model.forward(entities[2], mode="eval", seed=9)
        t2 = model.forward(entities[2], mode="eval", seed=9)
        np.testing.assert_array_equal(t1.attention, t2.attention)
        np.testing.assert_array_equal(t1.scores, t2.scores)
        np.testing.assert_array_equal(t1.triple_order, t2.triple_order)

    def test_final_distribution_is_positive_and_normalized(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2)
        for desc in entities:
            a = model.forward(desc, mode="eval", seed=0).attention
            assert (a > 0).all()
            assert a.sum() == pytest.approx(1.0, abs=1e-9)

    def test_preference_identity_holds_exactly(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2)
        trace = model.forward(entities[0], mode="eval", seed=0)
        np.testing.assert_array_equal(trace.preferences, trace.scores)

    def test_positive_rescaling_of_user_weights_preserves_ranking(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=3)
        desc = entities[2]
        trace = model.forward(desc, mode="eval", seed=4)
        base = Summarizer.integrate_logits(
            ad.constant(trace.preferences), ad.constant(trace.preference_weights)
        ).value
        scaled = Summarizer.integrate_logits(
            ad.constant(trace.preferences), ad.constant(trace.preference_weights * 3.7)
        ).value
        np.testing.assert_array_equal(np.argsort(-base), np.argsort(-scaled))

    def test_single_layer_ranking_follows_first_profile(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=1, variant="a5")
        desc = entities[1]
        trace = model.forward(desc, mode="eval", seed=2)
        if trace.preference_weights[0] > 0:
            expected = np.argsort(-trace.preferences[0], kind="stable")
        else:
            expected = np.argsort(trace.preferences[0], kind="stable")
        np.testing.assert_array_equal(np.argsort(-trace.attention, kind="stable"), expected)

    def test_trace_json_shape(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2)
        blob = model.forward(entities[0], mode="eval", seed=0).to_json()
        assert len(blob["layer_scores"]) == 2
        assert len(blob["attention"]) == 3


class TestDePermutation:
    def test_features_track_triples_for_any_permutation(self, small_world):
        entities, vocab = small_world
        desc = entities[2]  # n = 5
        model = tiny_model(vocab, n_max=5)
        # identity vs reversed: per-triple features differ (context changes),
        # but the row<->triple association must hold: compare against a
        # manual recomputation with the same permuted input.
        from kgsum.model import _bilstm

        reprs = model.represent(desc)
        for order in (np.arange(5), np.arange(5)[::-1].copy(), np.array([2, 0, 4, 1, 3])):
            feats, _ = _bilstm(model.store, "extractor", reprs, model.config.hidden, order)
            seq = ad.rows(reprs, order)
            feats_seq = _bilstm_raw(model, seq)
            for pos, triple_idx in enumerate(order):
                np.testing.assert_allclose(feats.value[triple_idx], feats_seq[pos], atol=1e-12)


def _bilstm_raw(model, seq):
    """Reference: run both directions over `seq` and return per-position
    concatenated states (no de-permutation)."""
    from kgsum.model import _lstm_pass

    store = model.store
    H = model.config.hidden
    f = [store.tensor(f"extractor_lstm_f_{p}") for p in ("Wx", "Wh", "b")]
    b = [store.tensor(f"extractor_lstm_b_{p}") for p in ("Wx", "Wh", "b")]
    fs, _ = _lstm_pass(seq, *f, H, reverse=False)
    bs, _ = _lstm_pass(seq, *b, H, reverse=True)
    return [np.concatenate([fs[t].value, bs[t].value]) for t in range(seq.value.shape[0])]


class TestVariants:
    def test_a2_weights_are_exactly_ones(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=3, variant="a2")
        trace = model.forward(entities[0], mode="eval", seed=0)
        np.testing.assert_array_equal(trace.preference_weights, np.ones(3))

    def test_a3_has_no_lstm_parameters(self, small_world):
        _, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2, variant="a3")
        assert not any("lstm" in name for name in model.store.names())

    def test_a1_keeps_user_lstm_but_drops_extractor(self, small_world):
        _, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2, variant="a1")
        names = model.store.names()
        assert any(name.startswith("user_lstm") for name in names)
        assert not any(name.startswith("extractor_lstm") for name in names)

    def test_a4_uses_fcn_instead_of_user_lstm(self, small_world):
        _, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2, variant="a4")
        names = model.store.names()
        assert "user_fcn_W" in names and "W_star" in names
        assert not any(name.startswith("user_lstm") for name in names)

    @pytest.mark.parametrize("variant", ["full", "a1", "a2", "a3", "a4", "a5"])
    def test_every_variant_produces_a_distribution(self, small_world, variant):
        entities, vocab = small_world
        layers = 1 if variant == "a5" else 2
        model = tiny_model(vocab, n_max=5, layers=layers, variant=variant)
        trace = model.forward(entities[2], mode="eval", seed=0)
        assert trace.attention.shape == (5,)
        assert trace.attention.sum() == pytest.approx(1.0, abs=1e-9)


class TestGradients:
    # (gain_tables, gain_weights) put each wiring in an O(1)-activation
    # regime where every gradient clears the finite-difference noise floor
    @pytest.mark.parametrize(
        "variant,gain_tables,gain_weights",
        [
            ("full", 2.5, 3.5),
            ("a1", 2.0, 2.0),
            ("a2", 3.0, 3.0),
            ("a3", 3.0, 3.0),
            ("a4", 3.0, 3.0),
            ("a5", 3.0, 3.5),
        ],
    )
    def test_full_pipeline_matches_finite_differences(
        self, small_world, variant, gain_tables, gain_weights
    ):
        entities, vocab = small_world
        layers = 1 if variant == "a5" else 2
        model = tiny_model(
            vocab, n_max=5, layers=layers, variant=variant, seed=7, word_dim=16, graph_dim=16
        )
        boost_params(model, gain_tables, gain_weights)
        desc = entities[2]
        gold = toy_target(len(desc), np.random.default_rng(0))

        def closure():
            trace = model.forward(desc, mode="eval", seed=5)
            return ad.cross_entropy_with_logits(trace.logits_node, gold)

        assert ad.grad_check(closure, model.store, eps=1e-5) < 1e-4

    def test_graph_tables_receive_no_gradient(self, small_world):
        entities, vocab = small_world
        model = tiny_model(vocab, n_max=5, layers=2)
        desc = entities[0]
        gold = toy_target(len(desc), np.random.default_rng(1))
        trace = model.forward(desc, mode="eval", seed=0)
        ad.backward(ad.cross_entropy_with_logits(trace.logits_node, gold))
        np.testing.assert_array_equal(
            model.store.grads["graph_entity"], np.zeros_like(model.store.params["graph_entity"])
        )
        assert np.abs(model.store.grads["word_table"]).sum() > 0
