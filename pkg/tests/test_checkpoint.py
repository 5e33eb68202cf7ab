import numpy as np
import pytest

from kgsum.checkpoint import (
    load_container,
    load_embeddings,
    load_model,
    save_container,
    save_embeddings,
    save_model,
)
from kgsum.errors import IntegrityError, LoadError
from kgsum.transe import GraphEmbeddings, TransEConfig


def test_container_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a": rng.normal(size=(7, 3)),
        "b": np.array([np.pi, -0.0, 1e-300, 1e300]),
    }
    path = tmp_path / "c.npz"
    save_container(path, {"kind": "test", "note": "x"}, tensors)
    header, loaded = load_container(path)
    assert header["kind"] == "test" and header["format_version"] == 1
    for name, t in tensors.items():
        assert loaded[name].tobytes() == t.tobytes()
        assert loaded[name].dtype == t.dtype


def test_missing_file_is_load_error(tmp_path):
    with pytest.raises(LoadError):
        load_container(tmp_path / "nope.npz")


def test_interrupted_write_leaves_no_partial_file(tmp_path, monkeypatch):
    path = tmp_path / "c.npz"

    def explode(*args, **kwargs):
        raise RuntimeError("disk died mid-write")

    monkeypatch.setattr(np, "savez_compressed", explode)
    with pytest.raises(RuntimeError):
        save_container(path, {}, {"a": np.ones(3)})
    assert not path.exists()
    assert list(tmp_path.iterdir()) == []


def _embeddings(digest="d" * 64):
    rng = np.random.default_rng(1)
    return GraphEmbeddings(
        entity=rng.normal(size=(5, 4)),
        relation=rng.normal(size=(3, 4)),
        config=TransEConfig(dim=4, epochs=2),
        vocab_digest=digest,
        loss_history=[1.0, 0.5],
    )


def test_embeddings_round_trip(tmp_path):
    emb = _embeddings()
    path = tmp_path / "emb.npz"
    save_embeddings(path, emb)
    back = load_embeddings(path, expected_vocab_digest=emb.vocab_digest)
    assert back.entity.tobytes() == emb.entity.tobytes()
    assert back.relation.tobytes() == emb.relation.tobytes()
    assert back.config == emb.config
    assert back.loss_history == emb.loss_history


def test_stale_embeddings_rejected(tmp_path):
    emb = _embeddings()
    path = tmp_path / "emb.npz"
    save_embeddings(path, emb)
    with pytest.raises(IntegrityError, match="stale"):
        load_embeddings(path, expected_vocab_digest="f" * 64)


def test_model_round_trip_and_wrong_kind(tmp_path):
    params = {"w": np.arange(6.0).reshape(2, 3)}
    path = tmp_path / "fold0.ckpt.npz"
    save_model(
        path,
        params,
        model_config={"n_max": 3},
        train_config={"epochs": 1},
        vocab_digest="v" * 64,
        corpus_digest="c" * 64,
        fold_map={"1": 0},
        round_index=0,
        best_epoch=1,
    )
    header, tensors = load_model(path, expected_vocab_digest="v" * 64)
    assert header["fold_map"] == {"1": 0}
    assert header["best_epoch"] == 1
    assert tensors["w"].tobytes() == params["w"].tobytes()

    emb_path = tmp_path / "emb.npz"
    save_embeddings(emb_path, _embeddings())
    with pytest.raises(LoadError):
        load_model(emb_path)
    with pytest.raises(LoadError):
        load_embeddings(path)
