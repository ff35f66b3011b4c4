"""Candidate change points by halving search over overlapping blocks.

Time indices here are 1-based and inclusive, so ``(a, b)`` means rows
``a..b`` of ``Y`` (``Y[a-1:b]``). A candidate ``q`` splits a window into
rows ``..q`` and ``q+1..``.

Within a window ``[t_min, t_max]`` the admissible candidates are
``x = t_min+delta .. t_max-delta``. Each step splits ``x`` at a pivot, fits
NMF to a left block (``min(x)-delta .. pivot``) and a right block
(``pivot .. max(x)+delta``, one row shorter when ``|x|`` is even) and keeps
the part of ``x`` covered by the block with the higher loss. A block that
straddles a change in clustering fits worse, so the search follows it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .nmf import FitSettings, check_kind, derive_seed, fit_best

_SEARCH = 3  # seed-path tag for block fits

BlockLoss = Callable[[np.ndarray, tuple], float]


@dataclass(frozen=True)
class SearchWindow:
    t_min: int
    t_max: int
    delta: int

    @property
    def t_start(self) -> int:
        return self.t_min + self.delta

    @property
    def t_end(self) -> int:
        return self.t_max - self.delta

    @property
    def searchable(self) -> bool:
        return self.t_start <= self.t_end


@dataclass(frozen=True)
class SearchStep:
    """Block bounds and losses from one comparison."""

    x_lo: int
    x_hi: int
    left: tuple[int, int]
    right: tuple[int, int]
    loss_left: float
    loss_right: float


@dataclass
class SearchResult:
    candidate: int | None
    window: SearchWindow
    steps: list[SearchStep] = field(default_factory=list)

    @property
    def n_fits(self) -> int:
        return 2 * len(self.steps)


@dataclass
class CandidateSet:
    points: list[int]
    searches: list[SearchResult]

    def __len__(self):
        return len(self.points)


def nmf_block_loss(r: int, kind: str, settings: FitSettings,
                   n_jobs: int | None = 1) -> BlockLoss:
    """Best-of-``n_run`` NMF loss of a block, seeded by the block's key."""
    kind = check_kind(kind)

    def loss(block, key):
        s = FitSettings(settings.n_run, settings.max_iter, settings.rel_tol,
                        derive_seed(settings.seed, _SEARCH, *key))
        return fit_best(block, r, kind, s, n_jobs).loss

    return loss


def binary_search_candidate(Y, window: SearchWindow, r: int = 2, kind: str = "kl",
                            settings: FitSettings | None = None, n_jobs: int | None = 1,
                            block_loss: BlockLoss | None = None) -> SearchResult:
    """Locate one candidate change point inside ``window``.

    Returns a :class:`SearchResult` whose ``candidate`` is ``None`` when the
    window is too short to search. ``block_loss(block, key)`` may replace
    the NMF fit (``key`` identifies the block deterministically).

    Ties keep the left half; at the final single index a tie returns that
    index rather than the one before it.
    """
    Y = np.asarray(Y, dtype=float)
    if block_loss is None:
        block_loss = nmf_block_loss(r, kind, settings or FitSettings(), n_jobs)
    delta = window.delta
    if window.t_min < 1 or window.t_max > Y.shape[0]:
        raise ValueError(f"window {window} outside 1..{Y.shape[0]}")
    result = SearchResult(None, window)
    if not window.searchable:
        return result

    def compare(step, lo, hi, left, right):
        key = (window.t_min, window.t_max, step)
        l_left = block_loss(Y[left[0] - 1:left[1]], key + (0,))
        l_right = block_loss(Y[right[0] - 1:right[1]], key + (1,))
        result.steps.append(SearchStep(lo, hi, left, right, l_left, l_right))
        return l_left, l_right

    lo, hi = window.t_start, window.t_end
    step = 0
    while hi > lo:
        n = hi - lo + 1
        if n % 2 == 0:
            pivot = lo + n // 2 - 1
            right = (pivot, hi + delta - 1)
            right_x = (pivot + 1, hi)
        else:
            pivot = lo + (n + 1) // 2 - 1
            right = (pivot, hi + delta)
            right_x = (pivot, hi)
        l_left, l_right = compare(step, lo, hi, (lo - delta, pivot), right)
        lo, hi = right_x if l_right > l_left else (lo, pivot)
        step += 1

    x = lo
    l_left, l_right = compare(step, x, x, (x - delta, x), (x, x + delta))
    result.candidate = x - 1 if l_left > l_right else x
    return result


def discover_candidates(Y, delta: int, r: int = 2, kind: str = "kl",
                        settings: FitSettings | None = None, n_jobs: int | None = 1,
                        block_loss: BlockLoss | None = None) -> CandidateSet:
    """Recursively search ``[1, T]`` and the child windows either side of each find.

    A window ``[a, b]`` yielding ``q`` spawns ``[a, q]`` and ``[q+1, b]``;
    recursion stops at windows shorter than ``2*delta + 1`` rows.
    """
    Y = np.asarray(Y, dtype=float)
    if delta < 1:
        raise ValueError("delta must be >= 1")
    if block_loss is None:
        block_loss = nmf_block_loss(r, kind, settings or FitSettings(), n_jobs)
    searches = []
    pending = [SearchWindow(1, Y.shape[0], delta)]
    while pending:
        window = pending.pop()
        if not window.searchable:
            continue
        res = binary_search_candidate(Y, window, block_loss=block_loss)
        searches.append(res)
        q = res.candidate
        pending.append(SearchWindow(q + 1, window.t_max, delta))
        pending.append(SearchWindow(window.t_min, q, delta))
    searches.sort(key=lambda s: s.candidate)
    return CandidateSet([s.candidate for s in searches], searches)
