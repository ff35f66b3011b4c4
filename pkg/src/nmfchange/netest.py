"""Consensus networks for stationary segments.

Each NMF run clusters the variables by the largest entry of their column
of ``H``. Averaging the co-membership matrices of many runs gives the
consensus matrix ``C``, where ``C_ij`` estimates how often ``i`` and ``j``
cluster together. A network is read off ``C`` either by cutting a
complete-linkage tree into ``K`` clusters or by thresholding ``C``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform

from ._parallel import parallel_map
from .nmf import check_kind, derive_seed, fit_once

logger = logging.getLogger(__name__)


@dataclass
class ConsensusMatrix:
    C: np.ndarray
    n_runs_used: int


def cluster_labels(H) -> np.ndarray:
    """Cluster of each variable: argmax over ``H``'s column (lowest index on ties)."""
    H = np.asarray(H)
    labels = np.argmax(H, axis=0)
    empty = ~np.any(H > 0, axis=0)
    if np.any(empty):
        logger.warning("%d variables have an all-zero H column; assigned to cluster 0",
                       int(empty.sum()))
        labels[empty] = 0
    return labels


def co_membership(labels) -> np.ndarray:
    labels = np.asarray(labels)
    A = (labels[:, None] == labels[None, :]).astype(np.int8)
    np.fill_diagonal(A, 0)
    return A


def run_adjacency(segment, r: int, kind: str = "kl", seed: int = 0,
                  max_iter: int = 2000, rel_tol: float = 1e-4) -> np.ndarray:
    """Co-clustering adjacency (zero diagonal) from a single NMF fit."""
    f = fit_once(segment, r, check_kind(kind), max_iter, rel_tol, seed)
    return co_membership(cluster_labels(f.H))


def _adjacency_task(args):
    return run_adjacency(*args)


def consensus(segment, r: int, kind: str = "kl", n_run: int = 100, seed: int = 0,
              max_iter: int = 2000, rel_tol: float = 1e-4,
              n_jobs: int | None = 1) -> ConsensusMatrix:
    """Mean of ``n_run`` seeded :func:`run_adjacency` matrices, unit diagonal."""
    if n_run < 1:
        raise ValueError("n_run must be >= 1")
    segment = np.asarray(segment, dtype=float)
    tasks = [(segment, r, kind, derive_seed(seed, i), max_iter, rel_tol)
             for i in range(n_run)]
    total = np.zeros((segment.shape[1],) * 2)
    for A in parallel_map(_adjacency_task, tasks, n_jobs):
        total += A
    C = total / n_run
    np.fill_diagonal(C, 1.0)
    return ConsensusMatrix(C, n_run)


def _canonical(labels) -> np.ndarray:
    """Renumber clusters in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse]


def cluster_cut(C, n_clusters: int):
    """Complete-linkage clustering on ``1 - C`` cut into ``n_clusters`` groups.

    Returns ``(labels, A)`` with labels numbered by first appearance.
    """
    C = np.asarray(getattr(C, "C", C), dtype=float)
    p = C.shape[0]
    if not 1 <= n_clusters <= p:
        raise ValueError(f"n_clusters must lie in [1, {p}]")
    D = 1.0 - C
    np.fill_diagonal(D, 0.0)
    D = np.clip((D + D.T) / 2, 0.0, None)
    Z = linkage(squareform(D, checks=False), method="complete")
    labels = _canonical(cut_tree(Z, n_clusters=n_clusters).ravel())
    return labels, co_membership(labels)


def threshold_adjacency(C, lam: float) -> np.ndarray:
    """``A_ij = 1`` iff ``C_ij > lam`` (off the diagonal)."""
    C = np.asarray(getattr(C, "C", C), dtype=float)
    A = (C > lam).astype(np.int8)
    np.fill_diagonal(A, 0)
    return A


def graph_density(A) -> float:
    """Fraction of off-diagonal entries that are edges."""
    A = np.asarray(A)
    p = A.shape[0]
    if p < 2:
        return 0.0
    off = ~np.eye(p, dtype=bool)
    return float(np.count_nonzero(A[off]) / off.sum())
