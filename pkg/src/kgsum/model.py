"""The summarization model: feature extractor plus preference simulator.

Each triple is represented by concatenating the word and graph embeddings
of its predicate and object (word lookups are trainable, graph lookups
are frozen).  A bidirectional LSTM encodes the triples in a randomized
order and yields per-triple features ``h_i`` plus a context vector ``c``
made of both directions' final hidden states.

Scoring happens in two phases.  First, ``m`` bilinear attention layers
produce multi-aspect scores ``s[j][i] = h_i^T W_j c``; each layer's score
vector is read as the preference profile of one simulated user
(``u = s``).  Second, the user profiles are themselves encoded by a
bidirectional LSTM (again in randomized order), scored against their
context with another bilinear form to obtain per-user weights ``a*``,
and combined: the final attention is ``softmax(u^T a*)``.

Ablation variants rewire this pipeline:

* ``a1``: no extractor LSTM; features are the raw representations and the
  context is their mean.
* ``a2``: no user-phase encoder; every simulated user gets weight 1.
* ``a3``: both removals combined.
* ``a4``: the user-phase encoder is a single tanh layer per user profile.
* ``a5``: a single attention layer (``m = 1``).
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass, replace

import numpy as np

from kgsum import autodiff as ad
from kgsum.autodiff import ParamStore, Tensor
from kgsum.corpus import EntityDescription, Vocabulary
from kgsum.errors import ConfigError, ContractError
from kgsum.rdf import IRI, extract_word
from kgsum.transe import GraphEmbeddings

__all__ = [
    "VARIANTS",
    "ModelConfig",
    "apply_variant",
    "AttentionTrace",
    "permute",
    "Summarizer",
]

VARIANTS = ("full", "a1", "a2", "a3", "a4", "a5")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; ``n_max`` is the corpus-wide maximum
    triple count, which fixes the user-phase input width."""

    n_max: int
    word_dim: int = 100
    graph_dim: int = 100
    hidden: int = 100
    user_hidden: int = 100
    layers: int = 6
    variant: str = "full"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.variant == "a5" and self.layers != 1:
            raise ConfigError("variant a5 requires exactly one attention layer")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")

    @property
    def repr_dim(self) -> int:
        return 2 * (self.word_dim + self.graph_dim)

    @property
    def feature_dim(self) -> int:
        return self.repr_dim if self.variant in ("a1", "a3") else 2 * self.hidden

    @property
    def has_extractor_lstm(self) -> bool:
        return self.variant not in ("a1", "a3")

    @property
    def has_user_lstm(self) -> bool:
        return self.variant in ("full", "a1", "a5")

    @property
    def has_user_fcn(self) -> bool:
        return self.variant == "a4"

    def to_json(self) -> dict:
        return {
            "n_max": self.n_max,
            "word_dim": self.word_dim,
            "graph_dim": self.graph_dim,
            "hidden": self.hidden,
            "user_hidden": self.user_hidden,
            "layers": self.layers,
            "variant": self.variant,
        }

    @staticmethod
    def from_json(data: dict) -> "ModelConfig":
        return ModelConfig(**data)


def apply_variant(variant: str, config: ModelConfig) -> ModelConfig:
    """Rewire a configuration for an ablation variant (``a5`` forces a
    single attention layer); unknown names raise ``ConfigError``."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    layers = 1 if variant == "a5" else config.layers
    return replace(config, variant=variant, layers=layers)


@functools.lru_cache(maxsize=65536)
def _eval_permutation(n: int, seed: int | None, key: str) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    local = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    perm = local.permutation(n)
    perm.setflags(write=False)  # cached: callers only index with it
    return perm


def permute(
    n: int,
    mode: str,
    *,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
    key: str = "",
) -> np.ndarray:
    """Sequence order for an encoder pass.

    ``train`` draws a fresh uniform permutation from the caller's stream;
    ``eval`` derives a fixed permutation from (seed, key) so repeated
    evaluations of the same entity agree bitwise.
    """
    if n < 1:
        raise ContractError("permute requires n >= 1")
    if mode == "train":
        if rng is None:
            raise ContractError("train-mode permutation needs the training rng")
        return rng.permutation(n)
    if mode == "eval":
        return _eval_permutation(n, seed, key)
    raise ContractError(f"unknown permutation mode {mode!r}")


@dataclass
class AttentionTrace:
    """Everything the forward pass computes for one entity, kept both as
    plain arrays (for selection/export) and as graph nodes (for loss)."""

    entity_id: str
    scores: np.ndarray              # per-layer raw scores, layers x n
    preferences: np.ndarray         # simulated user profiles, layers x n
    encoded_users: np.ndarray       # encoded profiles, layers x 2H*
    user_context: np.ndarray
    preference_weights: np.ndarray  # per-user weights, length layers
    attention: np.ndarray           # final distribution, length n
    triple_order: np.ndarray
    user_order: np.ndarray | None
    logits_node: Tensor
    attention_node: Tensor

    def to_json(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "layer_scores": self.scores.tolist(),
            "preference_weights": self.preference_weights.tolist(),
            "attention": self.attention.tolist(),
            "triple_order": self.triple_order.tolist(),
            "user_order": None if self.user_order is None else self.user_order.tolist(),
        }


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape)


def _add_lstm_params(store: ParamStore, rng: np.random.Generator, prefix: str, in_dim: int, hidden: int) -> None:
    for direction in ("f", "b"):
        store.add(f"{prefix}_lstm_{direction}_Wx", _glorot(rng, (in_dim, 4 * hidden)))
        store.add(f"{prefix}_lstm_{direction}_Wh", _glorot(rng, (hidden, 4 * hidden)))
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 1.0  # forget gate starts open
        store.add(f"{prefix}_lstm_{direction}_b", bias)


def _lstm_pass(
    X: Tensor, Wx: Tensor, Wh: Tensor, b: Tensor, hidden: int, reverse: bool
) -> tuple[list[Tensor], Tensor]:
    """One direction of an LSTM over the rows of ``X``; returns per-step
    hidden states (indexed by input position) and the final hidden state."""
    n = X.value.shape[0]
    proj = ad.matmul(X, Wx)  # input contribution for every step at once
    order = range(n - 1, -1, -1) if reverse else range(n)
    h_prev: Tensor | None = None
    c_prev: Tensor | None = None
    states: list[Tensor] = [None] * n  # type: ignore[list-item]
    for t in order:
        h_prev, c_prev = ad.lstm_step(proj, t, b, Wh, h_prev, c_prev, hidden)
        states[t] = h_prev
    assert h_prev is not None
    return states, h_prev


def _bilstm(
    store: ParamStore, prefix: str, X: Tensor, hidden: int, order: np.ndarray
) -> tuple[Tensor, Tensor]:
    """Bidirectional encoding of ``X`` rows visited in ``order``.

    Outputs are mapped back to input positions: row ``i`` of the returned
    matrix always corresponds to row ``i`` of ``X`` no matter the order.
    The context vector concatenates both directions' final states.
    """
    X_seq = ad.rows(X, order)
    fwd: dict[str, Tensor] = {p: store.tensor(f"{prefix}_lstm_f_{p}") for p in ("Wx", "Wh", "b")}
    bwd: dict[str, Tensor] = {p: store.tensor(f"{prefix}_lstm_b_{p}") for p in ("Wx", "Wh", "b")}
    f_states, f_final = _lstm_pass(X_seq, fwd["Wx"], fwd["Wh"], fwd["b"], hidden, reverse=False)
    b_states, b_final = _lstm_pass(X_seq, bwd["Wx"], bwd["Wh"], bwd["b"], hidden, reverse=True)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(len(order))
    stacked = ad.concat([ad.stack(f_states), ad.stack(b_states)], axis=1)
    features = ad.rows(stacked, inverse)
    context = ad.concat([f_final, b_final])
    return features, context


class Summarizer:
    """Scores the triples of an entity description.

    Holds the :class:`~kgsum.autodiff.ParamStore` with all trainable
    weights plus the frozen graph-embedding tables, and caches per-entity
    vocabulary id arrays for speed.
    """

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        graph: GraphEmbeddings,
        rng: np.random.Generator,
    ):
        if graph.entity.shape != (vocab.n_entities, config.graph_dim):
            raise ConfigError(
                f"graph entity table {graph.entity.shape} does not match "
                f"vocabulary/configured dim {(vocab.n_entities, config.graph_dim)}"
            )
        self.config = config
        self.vocab = vocab
        self.store = ParamStore()
        self._id_cache: dict[str, tuple[np.ndarray, ...]] = {}

        scale = 1.0 / np.sqrt(config.word_dim)
        self.store.add(
            "word_table", rng.uniform(-scale, scale, size=(vocab.n_words, config.word_dim))
        )
        self.store.add("graph_entity", graph.entity, trainable=False)
        self.store.add("graph_relation", graph.relation, trainable=False)

        if config.has_extractor_lstm:
            _add_lstm_params(self.store, rng, "extractor", config.repr_dim, config.hidden)
        for j in range(config.layers):
            self.store.add(f"score_W_{j}", _glorot(rng, (config.feature_dim, config.feature_dim)))
        if config.has_user_lstm:
            _add_lstm_params(self.store, rng, "user", config.n_max, config.user_hidden)
        if config.has_user_fcn:
            self.store.add("user_fcn_W", _glorot(rng, (config.n_max, 2 * config.user_hidden)))
            self.store.add("user_fcn_b", np.zeros(2 * config.user_hidden))
        if config.has_user_lstm or config.has_user_fcn:
            star = 2 * config.user_hidden
            self.store.add("W_star", _glorot(rng, (star, star)))

    # ------------------------------------------------------------------ input

    def _ids(self, desc: EntityDescription) -> tuple[np.ndarray, ...]:
        cached = self._id_cache.get(desc.entity_id)
        if cached is not None:
            return cached
        vocab = self.vocab
        pred_words, obj_words, rel_ids, obj_ents = [], [], [], []
        for t in desc.triples:
            pred_words.append(vocab.word_id(extract_word(IRI(t.predicate))))
            obj_words.append(vocab.word_id(extract_word(t.object)))
            rel_ids.append(vocab.relation_id(t.predicate))
            obj_ents.append(
                vocab.entity_id(t.object.value) if isinstance(t.object, IRI) else vocab.entity_oov
            )
        ids = tuple(np.asarray(a, dtype=np.intp) for a in (pred_words, obj_words, rel_ids, obj_ents))
        self._id_cache[desc.entity_id] = ids
        return ids

    def represent(self, desc: EntityDescription) -> Tensor:
        """Per-triple input representations, one row per triple in
        description order: [word(p) | graph(p) | word(o) | graph(o)].

        Word lookups are graph nodes (gradients flow to the word table);
        graph-embedding lookups are constants.
        """
        pred_words, obj_words, rel_ids, obj_ents = self._ids(desc)
        word_table = self.store.tensor("word_table")
        w_p = ad.rows(word_table, pred_words)
        w_o = ad.rows(word_table, obj_words)
        g_p = ad.constant(self.store.params["graph_relation"][rel_ids])
        g_o = ad.constant(self.store.params["graph_entity"][obj_ents])
        return ad.concat([w_p, g_p, w_o, g_o], axis=1)

    # ------------------------------------------------------------- simulator

    def multi_aspect_scores(self, features: Tensor, context: Tensor) -> Tensor:
        """Bilinear score of every triple against the context, one row per
        attention layer: raw, unnormalized."""
        rows = [
            ad.matmul(features, ad.matmul(self.store.tensor(f"score_W_{j}"), context))
            for j in range(self.config.layers)
        ]
        return ad.stack(rows)

    @staticmethod
    def simulate_users(scores: Tensor) -> Tensor:
        """Read each attention layer's scores as one simulated user's
        preference profile (an elementwise copy, kept as a named step so
        variants can intercept it)."""
        return ad.copy_(scores)

    def encode_users(self, prefs: Tensor, order: np.ndarray) -> tuple[Tensor, Tensor]:
        """Encode the user profiles (rows of ``prefs``, zero-padded to the
        corpus-wide maximum width) with the user-phase BiLSTM."""
        m, n = prefs.value.shape
        padded = ad.stack([ad.pad_to(ad.row(prefs, j), self.config.n_max) for j in range(m)])
        return _bilstm(self.store, "user", padded, self.config.user_hidden, order)

    def user_attention(self, encoded: Tensor, context: Tensor) -> Tensor:
        """Raw per-user weights: encoded profiles against their context
        through the bilinear form (no normalization)."""
        return ad.matmul(encoded, ad.matmul(self.store.tensor("W_star"), context))

    @staticmethod
    def integrate_logits(prefs: Tensor, weights: Tensor) -> Tensor:
        """Combine user profiles into one score per triple."""
        return ad.matmul(ad.transpose(prefs), weights)

    # ---------------------------------------------------------------- forward

    def forward(
        self,
        desc: EntityDescription,
        mode: str = "eval",
        rng: np.random.Generator | None = None,
        seed: int = 0,
    ) -> AttentionTrace:
        """Run the full pipeline for one entity and return the trace.

        ``mode='train'`` draws fresh sequence orders from ``rng``;
        ``mode='eval'`` uses fixed orders derived from (seed, entity id).
        """
        cfg = self.config
        n = len(desc)
        reprs = self.represent(desc)

        if cfg.has_extractor_lstm:
            triple_order = permute(n, mode, rng=rng, seed=seed, key=desc.entity_id)
            features, context = _bilstm(self.store, "extractor", reprs, cfg.hidden, triple_order)
        else:
            triple_order = np.arange(n)
            features, context = reprs, ad.mean_rows(reprs)

        scores = self.multi_aspect_scores(features, context)
        prefs = self.simulate_users(scores)

        user_order: np.ndarray | None = None
        if cfg.has_user_lstm:
            user_order = permute(
                cfg.layers, mode, rng=rng, seed=seed, key=desc.entity_id + ":users"
            )
            encoded, user_context = self.encode_users(prefs, user_order)
            weights = self.user_attention(encoded, user_context)
        elif cfg.has_user_fcn:
            padded = ad.stack(
                [ad.pad_to(ad.row(prefs, j), cfg.n_max) for j in range(cfg.layers)]
            )
            encoded = ad.tanh(
                ad.add(ad.matmul(padded, self.store.tensor("user_fcn_W")), self.store.tensor("user_fcn_b"))
            )
            user_context = ad.mean_rows(encoded)
            weights = self.user_attention(encoded, user_context)
        else:  # equal attention for every simulated user
            encoded = ad.constant(np.zeros((cfg.layers, 0)))
            user_context = ad.constant(np.zeros(0))
            weights = ad.constant(np.ones(cfg.layers))

        logits = self.integrate_logits(prefs, weights)
        attention = ad.softmax(logits)

        return AttentionTrace(
            entity_id=desc.entity_id,
            scores=scores.value.copy(),
            preferences=prefs.value.copy(),
            encoded_users=encoded.value.copy(),
            user_context=user_context.value.copy(),
            preference_weights=weights.value.copy(),
            attention=attention.value.copy(),
            triple_order=triple_order,
            user_order=user_order,
            logits_node=logits,
            attention_node=attention,
        )
