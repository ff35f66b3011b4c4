"""Confirming candidates: refit losses versus a time-permutation null.

For a candidate ``q`` with neighbouring boundaries ``b_L < q < b_R`` the
segment ``Z = Y[b_L..b_R]`` is split into ``Z[..q]`` and ``Z[q+1..]`` and
refit ``n_reps`` times, giving observed summed losses. Shuffling the rows
of ``Z`` and splitting at the same offset gives the null sample. A real
change makes the observed losses smaller, which a one-sided Welch test
decides.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._parallel import parallel_map
from .nmf import FitSettings, NumericalFailure, check_kind, derive_seed, fit_best

logger = logging.getLogger(__name__)

_REFIT = 4  # seed-path tag


@dataclass
class WelchResult:
    t_stat: float
    mean_observed: float
    mean_null: float
    var_observed: float
    var_null: float
    n_observed: int
    n_null: int
    df: float
    p_value: float
    alpha: float
    reject_null: bool


@dataclass
class RefitSample:
    candidate: int
    left_bound: int
    right_bound: int
    observed_losses: list[float] = field(default_factory=list)
    null_losses: list[float] = field(default_factory=list)
    flag: str | None = None


@dataclass
class CandidateTest:
    candidate: int
    sample: RefitSample
    welch: WelchResult | None
    kept: bool


@dataclass
class ConfirmedSet:
    points: list[int]
    tests: list[CandidateTest]

    def __len__(self):
        return len(self.points)


def welch_test(observed, null, alpha: float = 0.001) -> WelchResult:
    """One-sided Welch test of ``mean(observed) < mean(null)``.

    ``t = (m1 - m2) / sqrt(s1^2/n1 + s2^2/n2)`` with sample variances, and
    Welch-Satterthwaite degrees of freedom for the lower-tail p-value.
    """
    a = np.asarray(observed, dtype=float)
    b = np.asarray(null, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    m1, m2 = float(a.mean()), float(b.mean())
    v1, v2 = float(a.var(ddof=1)), float(b.var(ddof=1))
    n1, n2 = a.size, b.size
    se1, se2 = v1 / n1, v2 / n2
    se = se1 + se2
    diff = m1 - m2
    if se == 0.0:
        t = 0.0 if diff == 0 else float(np.copysign(np.inf, diff))
        df = float("nan")
        p = 0.5 if t == 0 else (0.0 if t < 0 else 1.0)
    else:
        t = diff / np.sqrt(se)
        df = se ** 2 / (se1 ** 2 / (n1 - 1) + se2 ** 2 / (n2 - 1))
        p = float(stats.t.cdf(t, df))
    return WelchResult(float(t), m1, m2, v1, v2, n1, n2, float(df), p,
                       alpha, bool(p < alpha))


def permute_segment(Z, seed: int) -> np.ndarray:
    """Shuffle whole rows (time points) of ``Z`` with one permutation."""
    Z = np.asarray(Z, dtype=float)
    return Z[np.random.default_rng(seed).permutation(Z.shape[0])]


def _pair_loss(Z, split, r, kind, settings, seed_left, seed_right):
    left = FitSettings(settings.n_run, settings.max_iter, settings.rel_tol, seed_left)
    right = FitSettings(settings.n_run, settings.max_iter, settings.rel_tol, seed_right)
    return fit_best(Z[:split], r, kind, left).loss + fit_best(Z[split:], r, kind, right).loss


def _rep(args):
    Z, Z_fixed_perm, split, r, kind, settings, base = args
    observed = _pair_loss(Z, split, r, kind, settings,
                          derive_seed(base, 0), derive_seed(base, 1))
    Zp = Z_fixed_perm if Z_fixed_perm is not None else permute_segment(Z, derive_seed(base, 2))
    null = _pair_loss(Zp, split, r, kind, settings,
                      derive_seed(base, 3), derive_seed(base, 4))
    return observed, null


def refit_losses(Y, candidate: int, left_bound: int, right_bound: int, n_reps: int,
                 r: int, kind: str = "kl", settings: FitSettings | None = None,
                 permute_once: bool = False, n_jobs: int | None = 1) -> RefitSample:
    """Observed and permuted summed refit losses for one candidate.

    Bounds and candidate are 1-based rows; the left piece is
    ``left_bound..candidate`` and the right ``candidate+1..right_bound``.
    ``settings.n_run`` restarts are used per piece and ``settings.seed``
    seeds every repetition. When a piece is too short for rank ``r`` the
    sample is returned empty with ``flag`` set.
    """
    kind = check_kind(kind)
    settings = settings or FitSettings(n_run=1)
    Y = np.asarray(Y, dtype=float)
    sample = RefitSample(candidate, left_bound, right_bound)
    if not 1 <= left_bound < candidate < right_bound <= Y.shape[0]:
        raise ValueError(f"need 1 <= {left_bound} < {candidate} < {right_bound} <= {Y.shape[0]}")
    Z = Y[left_bound - 1:right_bound]
    split = candidate - left_bound + 1
    shortest = min(split, Z.shape[0] - split)
    if shortest < 2 or not r < min(shortest, Z.shape[1]):
        sample.flag = f"degenerate sub-segment ({shortest} rows for rank {r})"
        return sample

    key = derive_seed(settings.seed, _REFIT, candidate, left_bound, right_bound)
    fixed = permute_segment(Z, derive_seed(key, 1 << 20)) if permute_once else None
    tasks = [(Z, fixed, split, r, kind, settings, derive_seed(key, j)) for j in range(n_reps)]
    try:
        pairs = parallel_map(_rep, tasks, n_jobs)
    except NumericalFailure as exc:
        sample.flag = f"numerical failure: {exc}"
        return sample
    sample.observed_losses = [o for o, _ in pairs]
    sample.null_losses = [n for _, n in pairs]
    return sample


def confirm_candidates(Y, candidates, config, r: int, seed: int | None = None,
                       n_jobs: int | None = 1) -> ConfirmedSet:
    """Keep the candidates whose refit losses beat the permutation null.

    Each candidate is tested inside its neighbours in ``{1, candidates, T}``
    and kept iff the Welch test rejects at ``config.alpha``.
    """
    Y = np.asarray(Y, dtype=float)
    points = list(candidates)
    if points != sorted(points):
        raise ValueError("candidates must be sorted ascending")
    seed = config.seed if seed is None else seed
    settings = config.fit_settings(seed, n_run=config.refit_runs)
    bounds = [1, *points, Y.shape[0]]
    tests, kept = [], []
    for i, q in enumerate(points, start=1):
        sample = refit_losses(Y, q, bounds[i - 1], bounds[i + 1], config.n_reps, r,
                              config.kind, settings, config.permute_once, n_jobs)
        welch = None
        keep = False
        if sample.flag is None and config.n_reps >= 2:
            welch = welch_test(sample.observed_losses, sample.null_losses, config.alpha)
            keep = welch.reject_null and welch.mean_observed < welch.mean_null
        elif sample.flag is not None:
            logger.warning("candidate %d rejected: %s", q, sample.flag)
        tests.append(CandidateTest(q, sample, welch, keep))
        if keep:
            kept.append(q)
    return ConfirmedSet(kept, tests)
