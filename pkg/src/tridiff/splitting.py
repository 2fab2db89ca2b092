"""Seeded division of a dataset into a training graph and held-out test pairs.

The split unit is the distinct (user, item) pair. Pairs are shuffled with
a seeded generator and the leading ceil(fraction * count) pairs are held
out; the training graph is rebuilt from the rest, so item-tag edges
attested only by held-out pairs disappear from it. Held-out pairs whose
user or item is absent from the training graph cannot be scored and are
dropped with a count.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .graph import TripartiteGraph, build_graph
from .ingestion import InteractionRecord


@dataclass(frozen=True)
class OrphanStats:
    """Held-out pairs dropped because the training graph lost their endpoint."""

    users: int = 0
    items: int = 0

    @property
    def total(self) -> int:
        return self.users + self.items


@dataclass(frozen=True)
class SplitDataset:
    training_graph: TripartiteGraph
    # training-graph user index -> ascending array of held-out item indices
    test_sets: dict[int, np.ndarray]
    orphan_stats: OrphanStats
    seed: int
    test_fraction: float

    @property
    def n_test_pairs(self) -> int:
        return sum(len(v) for v in self.test_sets.values())


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """Independent per-run seed from a master seed, order-insensitive."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(run_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _distinct_pairs(
    records: Iterable[InteractionRecord],
) -> tuple[list[tuple[str, str]], dict[tuple[str, str], tuple[str, ...]]]:
    """Distinct pairs in first-appearance order, with tags pooled per pair."""
    order: list[tuple[str, str]] = []
    tags: dict[tuple[str, str], dict[str, None]] = {}
    for rec in records:
        key = (rec.user, rec.item)
        if key not in tags:
            order.append(key)
            tags[key] = {}
        for t in rec.tags:
            tags[key].setdefault(t)
    return order, {k: tuple(v) for k, v in tags.items()}


def split(
    records: list[InteractionRecord],
    test_fraction: float,
    seed: int,
) -> SplitDataset:
    """Hold out a seeded random fraction of distinct pairs.

    Deterministic: the same records, fraction and seed always produce the
    same split. Raises :class:`ConfigError` for a fraction outside (0, 1)
    or one that would hold out every pair.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    pairs, pair_tags = _distinct_pairs(records)
    n_held = math.ceil(test_fraction * len(pairs))
    if n_held >= len(pairs):
        raise ConfigError(
            f"test_fraction {test_fraction} holds out all {len(pairs)} pairs"
        )

    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(pairs))
    held = frozenset(int(i) for i in perm[:n_held])

    train_records = [
        InteractionRecord(u, i, pair_tags[(u, i)])
        for k, (u, i) in enumerate(pairs)
        if k not in held
    ]
    graph = build_graph(train_records)

    per_user: dict[int, list[int]] = {}
    orphan_users = orphan_items = 0
    for k in sorted(held):
        u, i = pairs[k]
        ui = graph.user_index.get(u)
        if ui is None:
            orphan_users += 1
            continue
        ii = graph.item_index.get(i)
        if ii is None:
            orphan_items += 1
            continue
        per_user.setdefault(ui, []).append(ii)

    test_sets = {
        u: np.array(sorted(items), dtype=np.int64) for u, items in sorted(per_user.items())
    }
    for arr in test_sets.values():
        arr.flags.writeable = False
    return SplitDataset(
        training_graph=graph,
        test_sets=test_sets,
        orphan_stats=OrphanStats(users=orphan_users, items=orphan_items),
        seed=seed,
        test_fraction=test_fraction,
    )


def split_run(
    records: list[InteractionRecord],
    test_fraction: float,
    master_seed: int,
    run_index: int,
) -> SplitDataset:
    """Split with the derived seed for one run of a repeated experiment."""
    return split(records, test_fraction, derive_run_seed(master_seed, run_index))


def write_manifest(dataset: SplitDataset, records: list[InteractionRecord], path: str | Path) -> None:
    """Audit manifest: every distinct pair labelled ``train`` or ``test``.

    Pairs appear in first-appearance order. Held-out pairs are labelled
    ``test`` whether or not they survived orphan filtering, so the union
    of the two labels is exactly the distinct pairs of the input.
    """
    pairs, _ = _distinct_pairs(records)
    graph = dataset.training_graph
    test_pairs = set()
    for u, items in dataset.test_sets.items():
        for i in items:
            test_pairs.add((graph.user_labels[u], graph.item_labels[int(i)]))
    with io.open(path, "w", encoding="utf-8") as fh:
        for u, i in pairs:
            ui = graph.user_index.get(u)
            in_train = (
                ui is not None
                and graph.item_index.get(i) is not None
                and graph.has_edge(ui, graph.item_index[i])
            )
            label = "train" if in_train else "test"
            fh.write(f"{u}\t{i}\t{label}\n")
