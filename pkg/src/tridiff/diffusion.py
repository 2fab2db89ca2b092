"""Resource diffusion kernels and their blend.

Both kernels move an item-indexed resource vector through a two-step,
degree-normalised mass flow: out through one side of a bipartite graph
(users, or tags) and back to items. Each item splits its resource
equally over its neighbours on the way out, and each intermediate node
splits what it received equally over its items on the way back. Items
with no outgoing edge on the relevant side have no transition rule;
their mass is dropped and reported, never silently retained.

The blend f* = lambda * f' + (1 - lambda) * f'' interpolates between the
pure user-item result (lambda = 1) and the pure item-tag result
(lambda = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError
from .graph import TripartiteGraph


@dataclass(frozen=True)
class MassLoss:
    """Resource dropped by items with no outgoing edge for a diffusion."""

    dropped_mass: float
    dead_sources: int

    @property
    def lossless(self) -> bool:
        return self.dead_sources == 0


def _check_input(graph: TripartiteGraph, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (graph.n_items,):
        raise ContractError(
            f"resource vector has shape {f.shape}, expected ({graph.n_items},)"
        )
    if f.size and f.min() < 0:
        raise ContractError("resource vector has negative entries")
    if not np.all(np.isfinite(f)):
        raise ContractError("resource vector has non-finite entries")
    return f


def _loss(f: np.ndarray, inv_out_degree: np.ndarray) -> MassLoss:
    dead = (f > 0) & (inv_out_degree == 0)
    return MassLoss(dropped_mass=float(f[dead].sum()), dead_sources=int(dead.sum()))


def initial_vector(graph: TripartiteGraph, target_user: int) -> np.ndarray:
    """Unit resource on each item the target user collected, zero elsewhere."""
    graph._check(target_user, graph.n_users, "user")
    f = np.zeros(graph.n_items, dtype=np.float64)
    f[graph.user_items(target_user)] = 1.0
    return f


def diffuse_user_item(
    graph: TripartiteGraph,
    f: np.ndarray,
    with_diagnostics: bool = False,
):
    """Item -> users -> items mass flow (the collaborative side).

    Returns the diffused vector, or ``(vector, MassLoss)`` when
    ``with_diagnostics`` is set.
    """
    f = _check_input(graph, f)
    user_mass = graph.collect_matrix() @ (f * graph.inv_item_degree)
    out = graph.collect_matrix().T @ (user_mass * graph.inv_user_degree)
    if with_diagnostics:
        return out, _loss(f, graph.inv_item_degree)
    return out


def diffuse_item_tag(
    graph: TripartiteGraph,
    f: np.ndarray,
    with_diagnostics: bool = False,
):
    """Item -> tags -> items mass flow (the annotation side)."""
    f = _check_input(graph, f)
    ap = graph.annotation_matrix()
    tag_mass = ap.T @ (f * graph.inv_item_tag_degree)
    out = ap @ (tag_mass * graph.inv_tag_degree)
    if with_diagnostics:
        return out, _loss(f, graph.inv_item_tag_degree)
    return out


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def integrate(f_prime: np.ndarray, f_double_prime: np.ndarray, lam: float) -> np.ndarray:
    """Linear blend of the two diffusion results.

    At the endpoints the blend returns the pure vectors exactly: the
    vanished term is never touched, so no rounding enters.
    """
    lam = check_lambda(lam)
    f_prime = np.asarray(f_prime, dtype=np.float64)
    f_double_prime = np.asarray(f_double_prime, dtype=np.float64)
    if f_prime.shape != f_double_prime.shape:
        raise ContractError(
            f"blend inputs differ in shape: {f_prime.shape} vs {f_double_prime.shape}"
        )
    if lam == 1.0:
        return f_prime.copy()
    if lam == 0.0:
        return f_double_prime.copy()
    return lam * f_prime + (1.0 - lam) * f_double_prime


def score_user(graph: TripartiteGraph, target_user: int, lam: float) -> np.ndarray:
    """Blended recommendation scores for one user over all items."""
    f_prime, f_dprime = diffuse_both(graph, target_user)
    return integrate(f_prime, f_dprime, lam)


def diffuse_both(graph: TripartiteGraph, target_user: int) -> tuple[np.ndarray, np.ndarray]:
    """Both diffusions of one user's initial vector, computed sparsely.

    The initial vector has as many nonzeros as the user's profile, so
    the flow only ever touches nodes reachable in two hops; all gather
    and scatter work is proportional to the edges of those nodes, not to
    the graph size. Matches the dense operators to rounding.
    """
    graph._check(target_user, graph.n_users, "user")
    profile = graph.user_items(target_user)

    a = graph.collect_matrix()
    # user-item side: profile items send 1/k(I) to their users
    users, w = _push(graph._At.indptr, graph._At.indices, profile,
                     graph.inv_item_degree[profile])
    user_recv = np.bincount(users, weights=w, minlength=graph.n_users)
    touched = np.nonzero(user_recv)[0]
    items, w = _push(a.indptr, a.indices, touched,
                     user_recv[touched] * graph.inv_user_degree[touched])
    f_prime = np.bincount(items, weights=w, minlength=graph.n_items)

    # item-tag side: profile items send 1/k'(I) to their tags
    ap = graph.annotation_matrix()
    tags, w = _push(ap.indptr, ap.indices, profile,
                    graph.inv_item_tag_degree[profile])
    tag_recv = np.bincount(tags, weights=w, minlength=max(graph.n_tags, 1))
    touched = np.nonzero(tag_recv)[0]
    items, w = _push(graph._Apt.indptr, graph._Apt.indices, touched,
                     tag_recv[touched] * graph.inv_tag_degree[touched])
    f_dprime = np.bincount(items, weights=w, minlength=graph.n_items)
    return f_prime, f_dprime


def _push(indptr: np.ndarray, indices: np.ndarray, rows: np.ndarray, row_mass: np.ndarray):
    """Concatenated CSR neighbours of ``rows`` with ``row_mass`` repeated along.

    Callers fold the 1/degree normalisation into row_mass beforehand, so
    each output entry is one (destination, mass) contribution ready for
    np.bincount accumulation.
    """
    if len(rows) == 0:
        return np.empty(0, dtype=indices.dtype), np.empty(0, dtype=np.float64)
    starts = indptr[rows]
    counts = indptr[rows + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype), np.empty(0, dtype=np.float64)
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    pos = np.arange(total, dtype=np.int64) + offsets
    return indices[pos], np.repeat(row_mass, counts)
