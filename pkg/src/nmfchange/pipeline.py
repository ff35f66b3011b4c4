"""End-to-end detection: rank, candidates, confirmation, segment networks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import DetectorConfig
from .dataio import SCHEMA_VERSION, shift_nonneg
from .exceptions import ConfigurationError, IngestionError
from .inference import ConfirmedSet, confirm_candidates
from .netest import ConsensusMatrix, cluster_cut, consensus, graph_density, threshold_adjacency
from .nmf import derive_seed
from .rank import RankSearchResult, default_rank_range, find_optimal_rank
from .segmentation import CandidateSet, discover_candidates

logger = logging.getLogger(__name__)

# seed-path tags per stage
_RANK, _SEARCH, _CONFIRM, _NETWORK = 10, 11, 12, 13


@dataclass
class SegmentNetwork:
    start: int
    end: int
    consensus: ConsensusMatrix | None
    labels: np.ndarray | None = None
    adjacency_cut: np.ndarray | None = None
    adjacency_threshold: np.ndarray | None = None
    skipped: str | None = None

    @property
    def density(self) -> dict:
        out = {}
        if self.adjacency_cut is not None:
            out["cut"] = graph_density(self.adjacency_cut)
        if self.adjacency_threshold is not None:
            out["threshold"] = graph_density(self.adjacency_threshold)
        return out


@dataclass
class DetectionResult:
    change_points: list[int]
    rank: int
    candidates: CandidateSet
    confirmed: ConfirmedSet
    config: DetectorConfig
    shape: tuple[int, int]
    shift: float
    rank_search: RankSearchResult | None = None
    networks: list[SegmentNetwork] = field(default_factory=list)


def _validate(Y_raw, config: DetectorConfig) -> np.ndarray:
    Y_raw = np.asarray(Y_raw, dtype=float)
    if Y_raw.ndim != 2 or min(Y_raw.shape) < 2:
        raise IngestionError(f"expected a T x p matrix with T, p >= 2, got {Y_raw.shape}")
    if not np.all(np.isfinite(Y_raw)):
        raise IngestionError("input contains non-finite values")
    T, p = Y_raw.shape
    if T <= 2 * config.delta:
        raise ConfigurationError(f"T={T} must exceed 2*delta={2 * config.delta}")
    return Y_raw


def resolve_rank(Y, config: DetectorConfig, n_jobs=None):
    """Fixed rank from the config, or one selected on the whole series."""
    T, p = Y.shape
    # Every block in the search has at least delta + 1 rows.
    limit = min(config.delta + 1, p)
    if config.rank is not None:
        if config.rank >= limit:
            raise ConfigurationError(f"rank {config.rank} must be below {limit}")
        return config.rank, None
    ranks = config.rank_range or tuple(default_rank_range((T, p)))
    ranks = [r for r in ranks if 2 <= r < min(limit, T)]
    if not ranks:
        raise ConfigurationError("no admissible rank in rank_range")
    search = find_optimal_rank(Y, config.kind,
                               config.fit_settings(derive_seed(config.seed, _RANK)),
                               ranks, n_jobs)
    if search.exhausted:
        logger.warning("rank search exhausted; using r=%d", search.r_opt)
    return search.r_opt, search


def detect(Y_raw, config: DetectorConfig | None = None, n_jobs: int | None = None) -> DetectionResult:
    """Detect change points in the clustering structure of ``Y_raw`` (``T x p``).

    Negative input is shifted to a zero minimum first. ``n_jobs`` only
    changes speed; results are identical for any worker count.
    """
    config = config or DetectorConfig()
    Y_raw = _validate(Y_raw, config)
    Y, shift = shift_nonneg(Y_raw)
    r, search = resolve_rank(Y, config, n_jobs)
    logger.info("using rank %d", r)
    cands = discover_candidates(Y, config.delta, r, config.kind,
                                config.fit_settings(derive_seed(config.seed, _SEARCH)),
                                n_jobs)
    logger.info("%d candidates: %s", len(cands), cands.points)
    confirmed = confirm_candidates(Y, cands.points, config, r,
                                   seed=derive_seed(config.seed, _CONFIRM), n_jobs=n_jobs)
    logger.info("confirmed: %s", confirmed.points)
    return DetectionResult(confirmed.points, r, cands, confirmed, config,
                           Y.shape, shift, search)


def segment_bounds(change_points, T: int) -> list[tuple[int, int]]:
    """1-based inclusive ``(start, end)`` of the segments between change points."""
    b = [0, *sorted(change_points), T]
    return [(lo + 1, hi) for lo, hi in zip(b, b[1:])]


def segment_networks(Y, change_points, r: int, n_clusters: int | None = None,
                     lam: float | None = None, config: DetectorConfig | None = None,
                     n_run: int | None = None, n_jobs: int | None = None) -> list[SegmentNetwork]:
    """Consensus network for every segment between ``change_points``.

    With ``n_clusters`` the consensus tree is cut into that many clusters;
    with ``lam`` the consensus matrix is thresholded. Either or both may be
    given. Segments too short for rank ``r`` are skipped with a warning.
    """
    config = config or DetectorConfig()
    Y, _ = shift_nonneg(Y)
    n_run = config.n_run if n_run is None else n_run
    out = []
    for i, (lo, hi) in enumerate(segment_bounds(change_points, Y.shape[0])):
        seg = Y[lo - 1:hi]
        if seg.shape[0] < 2 or not r < min(seg.shape):
            logger.warning("segment %d-%d skipped: too short for rank %d", lo, hi, r)
            out.append(SegmentNetwork(lo, hi, None, skipped=f"too short for rank {r}"))
            continue
        C = consensus(seg, r, config.kind, n_run,
                      derive_seed(config.seed, _NETWORK, lo, hi),
                      config.max_iter, config.rel_tol, n_jobs)
        net = SegmentNetwork(lo, hi, C)
        if n_clusters is not None:
            net.labels, net.adjacency_cut = cluster_cut(C, n_clusters)
        if lam is not None:
            net.adjacency_threshold = threshold_adjacency(C, lam)
        out.append(net)
    return out


def _welch_doc(w):
    if w is None:
        return None
    return {"t_stat": w.t_stat, "df": w.df, "p_value": w.p_value, "alpha": w.alpha,
            "reject_null": w.reject_null,
            "mean_observed": w.mean_observed, "mean_null": w.mean_null,
            "var_observed": w.var_observed, "var_null": w.var_null,
            "n_observed": w.n_observed, "n_null": w.n_null}


def result_document(result: DetectionResult, created: str | None = None,
                    source: str | None = None) -> dict:
    """Plain-JSON record of a detection, with full provenance."""
    rs = result.rank_search
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": "nmfchange",
        "tool_version": __version__,
        "created": created,
        "source": source,
        "shape": list(result.shape),
        "shift": result.shift,
        "seed": result.config.seed,
        "config": result.config.to_dict(),
        "rank": result.rank,
        "rank_search": None if rs is None else {
            "r_opt": rs.r_opt, "exhausted": rs.exhausted, "ranks_tested": rs.ranks_tested,
            "losses_original": [rs.losses_original[r] for r in rs.ranks_tested],
            "losses_permuted": [rs.losses_permuted[r] for r in rs.ranks_tested],
        },
        "change_points": list(result.change_points),
        "candidates": [{
            "candidate": s.candidate, "window": [s.window.t_min, s.window.t_max],
            "steps": [{"x": [st.x_lo, st.x_hi], "left": list(st.left), "right": list(st.right),
                       "loss_left": st.loss_left, "loss_right": st.loss_right}
                      for st in s.steps],
        } for s in result.candidates.searches],
        "tests": [{
            "candidate": t.candidate, "kept": t.kept,
            "bounds": [t.sample.left_bound, t.sample.right_bound],
            "flag": t.sample.flag, "welch": _welch_doc(t.welch),
            "observed_losses": t.sample.observed_losses,
            "null_losses": t.sample.null_losses,
        } for t in result.confirmed.tests],
        "networks": [{
            "start": n.start, "end": n.end, "skipped": n.skipped,
            "labels": None if n.labels is None else [int(v) for v in n.labels],
            "density": n.density,
        } for n in result.networks],
    }
    return doc


def network_matrices(networks: list[SegmentNetwork]) -> dict:
    """Sidecar matrices keyed ``seg<i>.<kind>`` for :func:`nmfchange.dataio.emit`."""
    out = {}
    for i, n in enumerate(networks, start=1):
        if n.consensus is not None:
            out[f"seg{i}.consensus"] = n.consensus.C
        if n.adjacency_cut is not None:
            out[f"seg{i}.adjacency_cut"] = n.adjacency_cut
        if n.adjacency_threshold is not None:
            out[f"seg{i}.adjacency_threshold"] = n.adjacency_threshold
    return out
