"""Versioned on-disk containers for embeddings and model weights.

A checkpoint is a ``.npz`` archive holding a JSON header (format version,
configuration, vocabulary/corpus digests, fold map) plus named float64
tensors.  Round-trips are bit-exact.  Writes go through a temporary file
and an atomic rename, so an interrupted run never leaves a loadable
partial checkpoint.  Loads refuse containers whose vocabulary digest does
not match the corpus they are used with.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from kgsum.errors import ContractError, IntegrityError, LoadError
from kgsum.transe import GraphEmbeddings, TransEConfig

__all__ = [
    "FORMAT_VERSION",
    "save_container",
    "load_container",
    "save_embeddings",
    "load_embeddings",
    "save_model",
    "load_model",
]

FORMAT_VERSION = 1
_HEADER_KEY = "__header__"
_TENSOR_PREFIX = "t."


def save_container(path: str | os.PathLike, header: dict, tensors: dict[str, np.ndarray]) -> None:
    """Atomically write a header + named-tensor archive."""
    path = Path(path)
    header = {"format_version": FORMAT_VERSION, **header}
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    payload: dict[str, np.ndarray] = {_HEADER_KEY: np.frombuffer(blob, dtype=np.uint8)}
    for name, tensor in tensors.items():
        payload[_TENSOR_PREFIX + name] = np.ascontiguousarray(tensor)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        with open(tmp, "wb") as fh:
            np.savez_compressed(fh, **payload)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def load_container(path: str | os.PathLike) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        raise LoadError(f"checkpoint {path} does not exist")
    with np.load(path, allow_pickle=False) as archive:
        if _HEADER_KEY not in archive:
            raise LoadError(f"{path} is not a checkpoint container (missing header)")
        header = json.loads(bytes(archive[_HEADER_KEY]).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise LoadError(
                f"{path}: unsupported format version {header.get('format_version')!r}"
            )
        tensors = {
            name[len(_TENSOR_PREFIX):]: archive[name]
            for name in archive.files
            if name.startswith(_TENSOR_PREFIX)
        }
    return header, tensors


def save_embeddings(path: str | os.PathLike, emb: GraphEmbeddings) -> None:
    header = {
        "kind": "graph-embeddings",
        "config": emb.config.__dict__,
        "vocab_digest": emb.vocab_digest,
        "loss_history": emb.loss_history,
    }
    save_container(path, header, {"entity": emb.entity, "relation": emb.relation})


def load_embeddings(
    path: str | os.PathLike, expected_vocab_digest: str | None = None
) -> GraphEmbeddings:
    """Load pretrained tables; refuses stale embeddings when the expected
    vocabulary digest does not match."""
    header, tensors = load_container(path)
    if header.get("kind") != "graph-embeddings":
        raise LoadError(f"{path} is not an embeddings checkpoint")
    if expected_vocab_digest is not None and header["vocab_digest"] != expected_vocab_digest:
        raise IntegrityError(
            "stale embeddings: vocabulary digest "
            f"{header['vocab_digest'][:12]}... does not match the corpus "
            f"({expected_vocab_digest[:12]}...); re-run pretraining"
        )
    return GraphEmbeddings(
        entity=tensors["entity"],
        relation=tensors["relation"],
        config=TransEConfig(**header["config"]),
        vocab_digest=header["vocab_digest"],
        loss_history=list(header.get("loss_history", [])),
    )


def save_model(
    path: str | os.PathLike,
    params: dict[str, np.ndarray],
    *,
    model_config: dict,
    train_config: dict,
    vocab_digest: str,
    corpus_digest: str,
    fold_map: dict[str, int],
    round_index: int,
    best_epoch: int,
) -> None:
    header = {
        "kind": "model",
        "model_config": model_config,
        "train_config": train_config,
        "vocab_digest": vocab_digest,
        "corpus_digest": corpus_digest,
        "fold_map": fold_map,
        "round_index": round_index,
        "best_epoch": best_epoch,
    }
    save_container(path, header, params)


def load_model(
    path: str | os.PathLike, expected_vocab_digest: str | None = None
) -> tuple[dict, dict[str, np.ndarray]]:
    header, tensors = load_container(path)
    if header.get("kind") != "model":
        raise LoadError(f"{path} is not a model checkpoint")
    if expected_vocab_digest is not None and header["vocab_digest"] != expected_vocab_digest:
        raise IntegrityError(
            f"model checkpoint {path} was trained on a different corpus "
            "(vocabulary digest mismatch)"
        )
    if not tensors:
        raise ContractError(f"model checkpoint {path} holds no tensors")
    return header, tensors
