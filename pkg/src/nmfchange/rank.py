"""Choosing the factorization rank against a column-permuted baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nmf import FitSettings, check_kind, derive_seed, fit_best

# seed-path tags, so the permutation and each rank's restarts get
# independent streams from the same master seed
_PERMUTE, _FIT = 0, 1


@dataclass
class RankSearchResult:
    r_opt: int
    losses_original: dict[int, float]
    losses_permuted: dict[int, float]
    ranks_tested: list[int]
    exhausted: bool = False


def permute_per_column(Y, seed: int) -> np.ndarray:
    """Shuffle every column independently across time.

    Each column keeps its multiset of values; cross-column alignment of
    time points is destroyed.
    """
    Y = np.asarray(Y, dtype=float)
    rng = np.random.default_rng(seed)
    out = np.empty_like(Y)
    for j in range(Y.shape[1]):
        out[:, j] = Y[rng.permutation(Y.shape[0]), j]
    return out


def default_rank_range(shape, upper: int = 15) -> list[int]:
    top = min(upper, min(shape) - 1)
    return list(range(2, top + 1))


def find_optimal_rank(Y, kind: str = "kl", settings: FitSettings | None = None,
                      rank_range=None, n_jobs: int | None = 1) -> RankSearchResult:
    """First rank whose loss drop on ``Y`` is smaller than on a permuted copy.

    Losses ``L(r)`` (data) and ``L*(r)`` (one shared column-permuted copy)
    come from best-of-``n_run`` fits. Scanning ranks in ascending order,
    the first ``r`` with ``L(r-1) - L(r) < L*(r-1) - L*(r)`` is returned.
    If no rank qualifies the largest tested rank is returned with
    ``exhausted=True``.
    """
    settings = settings or FitSettings()
    kind = check_kind(kind)
    Y = np.asarray(Y, dtype=float)
    ranks = sorted(int(r) for r in (rank_range if rank_range is not None
                                    else default_rank_range(Y.shape)))
    if not ranks:
        raise ValueError("rank_range is empty")
    if ranks[0] < 2 or ranks[-1] >= min(Y.shape):
        raise ValueError(
            f"rank_range must lie in [2, {min(Y.shape) - 1}] for shape {Y.shape}")
    if len(set(ranks)) != len(ranks):
        raise ValueError("rank_range contains duplicates")

    Y_perm = permute_per_column(Y, derive_seed(settings.seed, _PERMUTE))
    L, L_star = {}, {}
    for r in ranks:
        # The same restart seeds are used on Y and Y* at a given rank.
        s = FitSettings(settings.n_run, settings.max_iter, settings.rel_tol,
                        derive_seed(settings.seed, _FIT, r))
        L[r] = fit_best(Y, r, kind, s, n_jobs).loss
        L_star[r] = fit_best(Y_perm, r, kind, s, n_jobs).loss

    for prev, r in zip(ranks, ranks[1:]):
        if L[prev] - L[r] < L_star[prev] - L_star[r]:
            return RankSearchResult(r, L, L_star, ranks)
    return RankSearchResult(ranks[-1], L, L_star, ranks, exhausted=True)
