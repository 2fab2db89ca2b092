"""Dense-matrix reference implementation of the diffusion operators.

Builds the explicit m x m transition matrices and applies them with
plain dense arithmetic. Quadratic in memory, so only suitable for small
graphs; exists to cross-check the sparse kernels, never for production
scoring.
"""

from __future__ import annotations

import numpy as np

from .diffusion import check_lambda
from .graph import TripartiteGraph


def dense_operators(graph: TripartiteGraph) -> tuple[np.ndarray, np.ndarray]:
    """The user-item and item-tag transition matrices as dense arrays.

    W_ui = A^T D_U^-1 A D_I^-1 and W_it = A' D_T^-1 A'^T D'_I^-1, with
    the convention that a zero degree inverts to zero (mass from such a
    column is dropped, matching the sparse kernels).
    """
    a = np.asarray(graph.collect_matrix().todense(), dtype=np.float64)
    ap = np.asarray(graph.annotation_matrix().todense(), dtype=np.float64)
    d_u = np.diag(graph.inv_user_degree)
    d_i = np.diag(graph.inv_item_degree)
    d_t = np.diag(graph.inv_tag_degree)
    d_ip = np.diag(graph.inv_item_tag_degree)
    w_ui = a.T @ d_u @ a @ d_i
    w_it = ap @ d_t @ ap.T @ d_ip
    return w_ui, w_it


def oracle_diffuse_user_item(graph: TripartiteGraph, f: np.ndarray) -> np.ndarray:
    w_ui, _ = dense_operators(graph)
    return w_ui @ np.asarray(f, dtype=np.float64)


def oracle_diffuse_item_tag(graph: TripartiteGraph, f: np.ndarray) -> np.ndarray:
    _, w_it = dense_operators(graph)
    return w_it @ np.asarray(f, dtype=np.float64)


def oracle_score_user(graph: TripartiteGraph, target_user: int, lam: float) -> np.ndarray:
    """Blended scores for one user, entirely via the dense operators."""
    lam = check_lambda(lam)
    f = np.zeros(graph.n_items, dtype=np.float64)
    f[graph.user_items(target_user)] = 1.0
    w_ui, w_it = dense_operators(graph)
    return lam * (w_ui @ f) + (1.0 - lam) * (w_it @ f)
