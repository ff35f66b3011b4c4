"""Non-negative matrix factorization by multiplicative updates.

Two objectives are supported, the squared Euclidean distance and the
generalized Kullback-Leibler divergence between ``X`` and ``W @ H``.
Every other stage of the detector calls :func:`fit_best` (multi-start)
or :func:`fit_once` (single start).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ._parallel import parallel_map
from .exceptions import DivergenceUndefined, NumericalFailure

logger = logging.getLogger(__name__)

LossKind = Literal["euclidean", "kl"]
LOSS_KINDS = ("euclidean", "kl")

EPS = 1e-16
CHECK_EVERY = 20


def check_kind(kind: str) -> str:
    kind = str(kind).lower()
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    return kind


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic child seed for ``master_seed`` and an integer key path.

    Mixing is numpy's ``SeedSequence`` with ``keys`` as the spawn key, so a
    run's seed depends only on its position, never on scheduling order.
    """
    ss = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Factorization:
    """Result of one NMF fit, ``X ~ W @ H``."""

    W: np.ndarray
    H: np.ndarray
    rank: int
    loss_kind: str
    loss: float
    n_iter: int = 0
    n_failed_runs: int = 0


@dataclass(frozen=True)
class FitSettings:
    """Restart and convergence controls shared by the fitting routines."""

    n_run: int = 1
    max_iter: int = 2000
    rel_tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.n_run < 1:
            raise ValueError("n_run must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")


def as_nonneg_matrix(X) -> np.ndarray:
    """Validate a time-series matrix: 2-D, finite, non-negative, at least 2x2."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError(f"matrix must be at least 2x2, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix contains non-finite entries")
    if np.any(X < 0):
        raise ValueError("matrix contains negative entries")
    return X


def loss_of(X, W, H, kind: LossKind = "kl") -> float:
    """Reconstruction loss of ``W @ H`` against ``X``.

    ``euclidean`` is ``sum((X - WH)**2)``; ``kl`` is
    ``sum(X*log(X/WH) - X + WH)`` with ``0*log(0) = 0``.

    Raises
    ------
    ValueError
        If the shapes do not conform.
    DivergenceUndefined
        For ``kl`` when some ``X_ij > 0`` has ``(WH)_ij == 0``.
    """
    kind = check_kind(kind)
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    H = np.asarray(H, dtype=float)
    if W.ndim != 2 or H.ndim != 2 or X.ndim != 2:
        raise ValueError("X, W and H must be 2-D")
    if W.shape[1] != H.shape[0] or (W.shape[0], H.shape[1]) != X.shape:
        raise ValueError(
            f"dimension mismatch: X {X.shape}, W {W.shape}, H {H.shape}")
    WH = W @ H
    if kind == "euclidean":
        return float(np.sum((X - WH) ** 2))
    return _kl(X, WH)


def _kl(X: np.ndarray, WH: np.ndarray) -> float:
    pos = X > 0
    if np.any(WH[pos] <= 0):
        raise DivergenceUndefined("X_ij > 0 where (WH)_ij == 0")
    Xp = X[pos]
    return float(np.sum(Xp * np.log(Xp / WH[pos])) - X.sum() + WH.sum())


def update_step(X, W, H, kind: LossKind = "kl"):
    """One multiplicative update of ``H`` followed by ``W``.

    Returns new arrays; the inputs are not modified. Each half-step does not
    increase the loss, and non-negative inputs stay non-negative.
    """
    kind = check_kind(kind)
    X = np.asarray(X, dtype=float)
    W = np.array(W, dtype=float)
    H = np.array(H, dtype=float)
    _update_inplace(X, W, H, kind)
    return W, H


def _update_inplace(X: np.ndarray, W: np.ndarray, H: np.ndarray, kind: str) -> None:
    if kind == "euclidean":
        H *= (W.T @ X) / (W.T @ W @ H + EPS)
        W *= (X @ H.T) / (W @ (H @ H.T) + EPS)
    else:
        H *= (W.T @ (X / (W @ H + EPS))) / (W.sum(axis=0)[:, None] + EPS)
        W *= ((X / (W @ H + EPS)) @ H.T) / (H.sum(axis=1)[None, :] + EPS)


def _initial_factors(X: np.ndarray, r: int, seed: int):
    rng = np.random.default_rng(seed)
    scale = float(X.max())
    if scale <= 0:
        scale = 1.0
    n, p = X.shape
    # 1 - U[0, 1) lies in (0, 1], so entries are strictly positive.
    W = scale * (1.0 - rng.random((n, r)))
    H = scale * (1.0 - rng.random((r, p)))
    return W, H


def fit_once(X, r: int, kind: LossKind = "kl", max_iter: int = 2000,
             rel_tol: float = 1e-4, seed: int = 0) -> Factorization:
    """Fit a rank-``r`` NMF from one seeded random start.

    Iterates :func:`update_step` until the relative loss decrease over the
    last 20 updates falls below ``rel_tol`` or ``max_iter`` is reached.

    Raises
    ------
    NumericalFailure
        If the loss becomes non-finite; ``.iteration`` holds the update index.
    """
    kind = check_kind(kind)
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    r = int(r)
    if not 1 <= r < min(n, p):
        raise ValueError(f"rank {r} must satisfy 1 <= r < min{X.shape}")
    W, H = _initial_factors(X, r, seed)

    def checked_loss(it):
        try:
            value = loss_of(X, W, H, kind)
        except DivergenceUndefined as exc:
            raise NumericalFailure(str(exc), it) from exc
        if not np.isfinite(value):
            raise NumericalFailure(f"non-finite loss at iteration {it}", it)
        return value

    reference = checked_loss(0)
    it = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while it < max_iter:
            _update_inplace(X, W, H, kind)
            it += 1
            if it % CHECK_EVERY == 0:
                current = checked_loss(it)
                if (reference - current) / max(reference, EPS) < rel_tol:
                    break
                reference = current
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(H))):
        raise NumericalFailure(f"non-finite factors at iteration {it}", it)
    return Factorization(W=W, H=H, rank=r, loss_kind=kind,
                         loss=checked_loss(it), n_iter=it)


def _fit_task(args):
    X, r, kind, max_iter, rel_tol, seed = args
    try:
        return fit_once(X, r, kind, max_iter, rel_tol, seed)
    except NumericalFailure as exc:
        return exc


def run_seeds(settings: FitSettings) -> list[int]:
    """Per-restart seeds used by :func:`fit_best` for ``settings``."""
    return [derive_seed(settings.seed, i) for i in range(settings.n_run)]


def fit_best(X, r: int, kind: LossKind = "kl",
             settings: FitSettings | None = None, n_jobs: int | None = 1) -> Factorization:
    """Best of ``settings.n_run`` seeded restarts (lowest loss, earliest run on ties).

    Restarts that fail numerically are skipped and counted in
    ``n_failed_runs``; the failure is raised only if every restart fails.
    """
    settings = settings or FitSettings()
    kind = check_kind(kind)
    X = np.asarray(X, dtype=float)
    tasks = [(X, r, kind, settings.max_iter, settings.rel_tol, s)
             for s in run_seeds(settings)]
    results = parallel_map(_fit_task, tasks, n_jobs)
    best = None
    failures = [res for res in results if isinstance(res, NumericalFailure)]
    for res in results:
        if isinstance(res, NumericalFailure):
            continue
        if best is None or res.loss < best.loss:
            best = res
    if best is None:
        raise failures[0]
    if failures:
        logger.warning("%d of %d NMF restarts failed numerically",
                       len(failures), settings.n_run)
        best = Factorization(best.W, best.H, best.rank, best.loss_kind,
                             best.loss, best.n_iter, len(failures))
    return best
