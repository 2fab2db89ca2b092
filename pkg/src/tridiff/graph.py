"""Tripartite graph construction from interaction records.

The structure is a pair of bipartite graphs sharing the item side: users
to items (one edge per distinct collected pair) and items to tags (one
edge per distinct annotation, pooled over all users of the item). Both
are stored as unweighted CSR adjacency matrices in the two orientations
needed by the diffusion kernels, together with precomputed degree and
reciprocal-degree vectors.

Indices are assigned by first appearance in the record stream, so the
same input always yields the same graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, DataError
from .ingestion import InteractionRecord

# adjacency orientations accepted by neighbors()
RELATIONS = ("user->items", "item->users", "item->tags", "tag->items")


@dataclass(frozen=True)
class GraphStats:
    """Collapsed multiplicities recorded during construction."""

    duplicate_pairs: int
    duplicate_item_tags: int


def _csr_from_pairs(rows, cols, shape) -> sp.csr_matrix:
    data = np.ones(len(rows), dtype=np.float64)
    mat = sp.csr_matrix((data, (rows, cols)), shape=shape)
    mat.sum_duplicates()
    # construction must supply deduplicated pairs; duplicates here would
    # silently turn the graph into a weighted one
    if mat.nnz and mat.data.max() > 1.0:
        raise ContractError("duplicate edges passed to CSR construction")
    mat.data.flags.writeable = False
    mat.indices.flags.writeable = False
    mat.indptr.flags.writeable = False
    return mat


def _degrees(mat: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    deg = np.diff(mat.indptr).astype(np.float64)
    with np.errstate(divide="ignore"):
        inv = np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0)
    deg.flags.writeable = False
    inv.flags.writeable = False
    return deg, inv


class TripartiteGraph:
    """Immutable user-item-tag graph with degree-normalised access paths.

    Not constructed directly in normal use; see :func:`build_graph`.
    """

    def __init__(
        self,
        user_labels: tuple[str, ...],
        item_labels: tuple[str, ...],
        tag_labels: tuple[str, ...],
        ui_pairs: np.ndarray,
        it_pairs: np.ndarray,
        stats: GraphStats,
    ):
        n, m, r = len(user_labels), len(item_labels), len(tag_labels)
        if n == 0 or m == 0:
            raise DataError("graph needs at least one user and one item")
        self.user_labels = user_labels
        self.item_labels = item_labels
        self.tag_labels = tag_labels
        self.user_index = {u: i for i, u in enumerate(user_labels)}
        self.item_index = {it: i for i, it in enumerate(item_labels)}
        self.tag_index = {t: i for i, t in enumerate(tag_labels)}
        self.stats = stats

        self._A = _csr_from_pairs(ui_pairs[:, 0], ui_pairs[:, 1], (n, m))
        self._At = self._A.T.tocsr()
        if len(it_pairs):
            self._Ap = _csr_from_pairs(it_pairs[:, 0], it_pairs[:, 1], (m, r))
        else:
            self._Ap = sp.csr_matrix((m, max(r, 0)), dtype=np.float64)
        self._Apt = self._Ap.T.tocsr()
        for mat in (self._At, self._Apt):
            mat.data.flags.writeable = False
            mat.indices.flags.writeable = False
            mat.indptr.flags.writeable = False

        self.user_degree, self.inv_user_degree = _degrees(self._A)
        self.item_degree, self.inv_item_degree = _degrees(self._At)
        self.item_tag_degree, self.inv_item_tag_degree = _degrees(self._Ap)
        self.tag_degree, self.inv_tag_degree = _degrees(self._Apt)

    # -- sizes ---------------------------------------------------------

    @property
    def n_users(self) -> int:
        return len(self.user_labels)

    @property
    def n_items(self) -> int:
        return len(self.item_labels)

    @property
    def n_tags(self) -> int:
        return len(self.tag_labels)

    @property
    def n_collect_edges(self) -> int:
        return self._A.nnz

    @property
    def n_annotation_edges(self) -> int:
        return self._Ap.nnz

    # -- neighbourhoods ------------------------------------------------

    @staticmethod
    def _check(index: int, size: int, kind: str) -> None:
        if not 0 <= index < size:
            raise ContractError(f"{kind} index {index} out of range [0, {size})")

    def user_items(self, u: int) -> np.ndarray:
        """Indices of items collected by user ``u`` (ascending)."""
        self._check(u, self.n_users, "user")
        return self._A.indices[self._A.indptr[u]:self._A.indptr[u + 1]]

    def item_users(self, i: int) -> np.ndarray:
        self._check(i, self.n_items, "item")
        return self._At.indices[self._At.indptr[i]:self._At.indptr[i + 1]]

    def item_tags(self, i: int) -> np.ndarray:
        self._check(i, self.n_items, "item")
        return self._Ap.indices[self._Ap.indptr[i]:self._Ap.indptr[i + 1]]

    def tag_items(self, t: int) -> np.ndarray:
        self._check(t, self.n_tags, "tag")
        return self._Apt.indices[self._Apt.indptr[t]:self._Apt.indptr[t + 1]]

    def neighbors(self, index: int, relation: str) -> np.ndarray:
        if relation == "user->items":
            return self.user_items(index)
        if relation == "item->users":
            return self.item_users(index)
        if relation == "item->tags":
            return self.item_tags(index)
        if relation == "tag->items":
            return self.tag_items(index)
        raise ContractError(f"unknown relation {relation!r}; expected one of {RELATIONS}")

    def has_edge(self, u: int, i: int) -> bool:
        row = self.user_items(u)
        pos = np.searchsorted(row, i)
        return pos < len(row) and row[pos] == i

    def collect_matrix(self) -> sp.csr_matrix:
        """The n x m user-item adjacency (read-only buffers)."""
        return self._A

    def annotation_matrix(self) -> sp.csr_matrix:
        """The m x r item-tag adjacency (read-only buffers)."""
        return self._Ap

    def __repr__(self) -> str:
        return (
            f"TripartiteGraph(users={self.n_users}, items={self.n_items}, "
            f"tags={self.n_tags}, collects={self.n_collect_edges}, "
            f"annotations={self.n_annotation_edges})"
        )


def build_graph(records: list[InteractionRecord]) -> TripartiteGraph:
    """Index labels by first appearance and assemble the adjacency structure.

    Repeated user-item pairs collapse to a single edge; repeated item-tag
    annotations (from different users, typically) likewise. The collapse
    counts are kept in ``graph.stats``.
    """
    if not records:
        raise DataError("cannot build a graph from zero records")
    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    tag_index: dict[str, int] = {}
    ui_seen: set[tuple[int, int]] = set()
    it_seen: set[tuple[int, int]] = set()
    ui_pairs: list[tuple[int, int]] = []
    it_pairs: list[tuple[int, int]] = []
    dup_pairs = dup_tags = 0

    for rec in records:
        u = user_index.setdefault(rec.user, len(user_index))
        i = item_index.setdefault(rec.item, len(item_index))
        if (u, i) in ui_seen:
            dup_pairs += 1
        else:
            ui_seen.add((u, i))
            ui_pairs.append((u, i))
        for tag in rec.tags:
            t = tag_index.setdefault(tag, len(tag_index))
            if (i, t) in it_seen:
                dup_tags += 1
            else:
                it_seen.add((i, t))
                it_pairs.append((i, t))

    return TripartiteGraph(
        user_labels=tuple(user_index),
        item_labels=tuple(item_index),
        tag_labels=tuple(tag_index),
        ui_pairs=np.asarray(ui_pairs, dtype=np.int64).reshape(-1, 2),
        it_pairs=np.asarray(it_pairs, dtype=np.int64).reshape(-1, 2),
        stats=GraphStats(duplicate_pairs=dup_pairs, duplicate_item_tags=dup_tags),
    )
