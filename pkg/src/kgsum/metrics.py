"""Top-k selection and IR metrics for summary evaluation.

F-measure is the harmonic mean of precision and recall of the selected
set against one user's gold set; average precision is computed over the
ranked summary list.  Per-entity scores average the five users; corpus
scores average entities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kgsum.errors import ContractError

__all__ = ["Summary", "top_k", "f_measure", "average_precision", "mean_score"]


@dataclass(frozen=True)
class Summary:
    """Ranked top-k selection: indices ordered by descending score, ties
    broken by ascending triple index."""

    entity_id: str
    k: int
    indices: tuple[int, ...]
    scores: tuple[float, ...]


def top_k(attention: np.ndarray, k: int, entity_id: str = "") -> Summary:
    """Indices of the k largest attention scores (all of them if k >= n)."""
    if k < 1:
        raise ContractError("k must be >= 1")
    a = np.asarray(attention, dtype=np.float64)
    n = a.shape[0]
    # lexsort's last key is primary: descending score, then ascending index
    order = np.lexsort((np.arange(n), -a))
    chosen = order[: min(k, n)]
    return Summary(
        entity_id=entity_id,
        k=k,
        indices=tuple(int(i) for i in chosen),
        scores=tuple(float(a[i]) for i in chosen),
    )


def f_measure(selected, gold_set) -> float:
    """Harmonic mean of precision and recall; 0 when the overlap is empty."""
    selected = list(selected)
    gold_set = set(gold_set)
    if not gold_set:
        raise ContractError("gold set is empty")
    if not selected:
        return 0.0
    overlap = len(set(selected) & gold_set)
    precision = overlap / len(selected)
    recall = overlap / len(gold_set)
    if precision + recall == 0.0:
        return 0.0
    if precision == recall:  # equal-size case: F = P = R, exactly
        return precision
    return 2.0 * precision * recall / (precision + recall)


def average_precision(ranked, gold_set) -> float:
    """AP of a ranked list: mean of precision@r over the ranks r that hit
    the gold set, normalized by the gold size."""
    gold_set = set(gold_set)
    if not gold_set:
        raise ContractError("gold set is empty")
    hits = 0
    total = 0.0
    for rank, item in enumerate(ranked, start=1):
        if item in gold_set:
            hits += 1
            total += hits / rank
    return total / len(gold_set)


def mean_score(values) -> float:
    values = list(values)
    if not values:
        raise ContractError("cannot average an empty score list")
    return float(np.mean(values))
