"""Deterministic top-L recommendation lists and rank queries.

Candidates are the training-graph items the user has not collected.
Ordering is by descending blended score with ties broken by ascending
item index, which makes every list a prefix of every longer list and
keeps output independent of evaluation order and parallelism.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .diffusion import score_user
from .errors import ConfigError, ContractError, UnscorableUserError
from .graph import TripartiteGraph


@dataclass(frozen=True)
class RecommendationList:
    user: int
    items: np.ndarray
    scores: np.ndarray
    requested_length: int

    @property
    def short(self) -> bool:
        """True when the user had fewer than L candidates."""
        return len(self.items) < self.requested_length


def candidate_items(graph: TripartiteGraph, target_user: int) -> np.ndarray:
    """Uncollected training-graph items, ascending."""
    mask = np.ones(graph.n_items, dtype=bool)
    mask[graph.user_items(target_user)] = False
    return np.nonzero(mask)[0]


def top_candidates(
    candidates: np.ndarray,
    scores: np.ndarray,
    limit: int,
) -> np.ndarray:
    """Positions (into ``candidates``) of the top ``limit`` entries.

    Implements the total order (score descending, item index ascending)
    with a threshold partition, so only the boundary tie group is ever
    sorted fully. Returns min(limit, len(candidates)) positions.
    """
    c = len(candidates)
    k = min(limit, c)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if k == c:
        sel = np.arange(c, dtype=np.int64)
    else:
        threshold = np.partition(scores, c - k)[c - k]
        above = np.nonzero(scores > threshold)[0]
        need = k - len(above)
        ties = np.nonzero(scores == threshold)[0][:need]
        sel = np.concatenate([above, ties])
    order = np.lexsort((candidates[sel], -scores[sel]))
    return sel[order]


def recommend_from_scores(
    graph: TripartiteGraph,
    target_user: int,
    scores: np.ndarray,
    length: int,
) -> RecommendationList:
    """Top-L list from a precomputed full score vector."""
    if length < 1:
        raise ConfigError(f"recommendation list length must be >= 1, got {length}")
    cand = candidate_items(graph, target_user)
    top = top_candidates(cand, scores[cand], length)
    items = cand[top]
    return RecommendationList(
        user=target_user,
        items=items,
        scores=scores[items],
        requested_length=length,
    )


def recommend(
    graph: TripartiteGraph,
    target_user: int,
    lam: float,
    length: int,
) -> RecommendationList:
    """Score the user and return their top-L uncollected items."""
    if length < 1:
        raise ConfigError(f"recommendation list length must be >= 1, got {length}")
    if len(graph.user_items(target_user)) == 0:
        raise UnscorableUserError(
            f"user {graph.user_labels[target_user]!r} has an empty training profile"
        )
    return recommend_from_scores(graph, target_user, score_user(graph, target_user, lam), length)


def rank_of_items(
    graph: TripartiteGraph,
    target_user: int,
    lam: float,
    probe_items: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Scores and 1-based mean-tie ranks of probe items among candidates.

    A probe tied with t-1 other candidates at g strictly better scores
    gets rank g + (t + 1) / 2, the mean of its tie group's positions.
    """
    probe_items = np.asarray(probe_items, dtype=np.int64)
    profile = graph.user_items(target_user)
    if np.isin(probe_items, profile).any():
        raise ContractError("probe items must lie outside the training profile")
    scores = score_user(graph, target_user, lam)
    cand = candidate_items(graph, target_user)
    asc = np.sort(scores[cand])
    probe_scores = scores[probe_items]
    n_greater = len(asc) - np.searchsorted(asc, probe_scores, side="right")
    n_tied = (
        np.searchsorted(asc, probe_scores, side="right")
        - np.searchsorted(asc, probe_scores, side="left")
    )
    ranks = n_greater + (n_tied + 1) / 2.0
    return probe_scores, ranks


def write_lists(
    lists: Iterable[RecommendationList],
    graph: TripartiteGraph,
    destination,
) -> None:
    """Batch export, one TSV line per recommended item.

    Format: ``user_label<TAB>rank<TAB>item_label<TAB>score`` with the
    rank 1-based and the score printed as its shortest round-trip
    decimal.
    """
    def emit(fh):
        for lst in lists:
            user = graph.user_labels[lst.user]
            for rank, (item, score) in enumerate(zip(lst.items, lst.scores), start=1):
                fh.write(
                    f"{user}\t{rank}\t{graph.item_labels[int(item)]}\t{repr(float(score))}\n"
                )

    if isinstance(destination, (str, Path)):
        with io.open(destination, "w", encoding="utf-8") as fh:
            emit(fh)
    else:
        emit(destination)
