"""Block-correlated Gaussian scenarios with planted clustering changes.

Five scenarios are provided (ids 1-5). Each is a sequence of segments;
within a segment rows are i.i.d. ``N(0, Sigma)`` where ``Sigma`` is built
from a cluster labelling of the variables:

* structure 1: 1 on the diagonal, 0.75 within a cluster, 0.20 between;
* structure 2: as structure 1, but ``0.20**d`` between clusters, where
  ``d`` is the distance between the two variables once they are laid out
  cluster by cluster (stable within a cluster).

Relabelling the variables therefore permutes one fixed positive-definite
matrix; for contiguous clusters ``d = |i - j|``.

Change points use the convention that ``q`` is the last row (1-based) of
the segment before the change.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WITHIN = 0.75
BETWEEN = 0.20
PD_FLOOR = 1e-8


class CovarianceError(ValueError):
    """Raised when a labelling does not yield a positive-definite matrix."""


@dataclass(frozen=True)
class CovarianceSpec:
    labels: tuple[int, ...]
    structure: int = 1

    def __post_init__(self):
        if self.structure not in (1, 2):
            raise ValueError(f"structure must be 1 or 2, got {self.structure}")
        if len(self.labels) < 2:
            raise ValueError("need at least two variables")

    @property
    def p(self) -> int:
        return len(self.labels)

    @property
    def n_clusters(self) -> int:
        return len(set(self.labels))


@dataclass
class SimulationScenario:
    id: int
    T: int
    p: int
    change_points: tuple[int, ...]
    segments: list[CovarianceSpec]
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        bounds = (0, *self.change_points, self.T)
        if any(b >= c for b, c in zip(bounds, bounds[1:])):
            raise ValueError(f"change points {self.change_points} not increasing inside (0, {self.T})")
        if len(self.segments) != len(self.change_points) + 1:
            raise ValueError("need one covariance spec per segment")
        if any(s.p != self.p for s in self.segments):
            raise ValueError("segment specs disagree on p")

    def segment_bounds(self) -> list[tuple[int, int]]:
        """0-based half-open row ranges of the segments."""
        b = (0, *self.change_points, self.T)
        return list(zip(b, b[1:]))


def build_sigma(spec: CovarianceSpec, ridge: bool = True, info: dict | None = None) -> np.ndarray:
    """Correlation matrix for a labelling.

    If the smallest eigenvalue is at or below ``1e-8`` and ``ridge`` is set,
    the smallest ridge ``eps * I`` lifting it to ``1e-8`` is added and the
    result rescaled back to unit diagonal; ``eps`` is stored in
    ``info["ridge"]``. With ``ridge=False`` a :class:`CovarianceError` is
    raised instead.
    """
    labels = np.asarray(spec.labels)
    p = labels.size
    same = labels[:, None] == labels[None, :]
    if spec.structure == 1:
        between = np.full((p, p), BETWEEN)
    else:
        pos = np.empty(p, dtype=int)
        pos[np.argsort(labels, kind="stable")] = np.arange(p)
        between = BETWEEN ** np.abs(pos[:, None] - pos[None, :]).astype(float)
    sigma = np.where(same, WITHIN, between)
    np.fill_diagonal(sigma, 1.0)

    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    eps = 0.0
    if lam_min <= PD_FLOOR:
        if not ridge:
            raise CovarianceError(
                f"structure {spec.structure} covariance for {spec.n_clusters} clusters "
                f"over p={p} is not positive definite (min eigenvalue {lam_min:.3g})")
        eps = PD_FLOOR - lam_min
        sigma = (sigma + eps * np.eye(p)) / (1.0 + eps)
    if info is not None:
        info["ridge"] = eps
    return sigma


def block_labels(p: int, k: int) -> np.ndarray:
    """Contiguous, near-equal clusters ``0..k-1``."""
    return (np.arange(p) * k) // p


PAPER_SIZES = {1: (200, 400), 2: (200, 400), 3: (400, 600), 4: (600, 800), 5: (300, 200)}
PAPER_CHANGES = {1: (), 2: (100,), 3: (100, 200, 300), 4: (200, 400), 5: (100, 200)}
SIM3_STRUCTURE = 1


def make_scenario(sim_id: int, seed: int = 0, T: int | None = None,
                  p: int | None = None) -> SimulationScenario:
    """Build simulation ``sim_id`` with its random relabelings drawn from ``seed``.

    ``T`` and ``p`` default to the full-size settings; when ``T`` is
    overridden the change points are rescaled proportionally.
    """
    if sim_id not in PAPER_SIZES:
        raise ValueError(f"unknown simulation id {sim_id}")
    T0, p0 = PAPER_SIZES[sim_id]
    T = T0 if T is None else int(T)
    p = p0 if p is None else int(p)
    changes = tuple(int(round(q * T / T0)) for q in PAPER_CHANGES[sim_id])
    rng = np.random.default_rng(seed)
    notes: dict = {}

    def spec(labels, structure):
        return CovarianceSpec(tuple(int(v) for v in labels), structure)

    if sim_id == 1:
        segs = [spec(block_labels(p, 2), 1)]
    elif sim_id == 2:
        a = block_labels(p, 2)
        segs = [spec(a, 1), spec(rng.permutation(a), 1)]
    elif sim_id == 3:
        a = block_labels(p, 3)
        gone = int(rng.integers(3))
        keep = [c for c in range(3) if c != gone]
        b = a.copy()
        for n, j in enumerate(np.flatnonzero(a == gone)):
            b[j] = keep[n % 2]
        b = np.searchsorted(keep, b)  # relabel to 0..1
        c = rng.permutation(b)
        d = c.copy()
        moved = []
        for cl in (0, 1):
            members = np.flatnonzero(c == cl)
            take = members[: members.size // 3]
            d[take] = 2
            moved.extend(int(j) for j in take)
        notes.update(dissolved_cluster=gone, moved_to_new_cluster=sorted(moved))
        segs = [spec(x, SIM3_STRUCTURE) for x in (a, b, c, d)]
    elif sim_id == 4:
        labs = [block_labels(p, 2)]
        for _ in changes:
            cur = labs[-1].copy()
            new = cur.copy()
            for cl in (0, 1):
                members = np.flatnonzero(cur == cl)
                move = rng.choice(members, members.size // 2, replace=False)
                new[move] = 1 - cl
            labs.append(new)
        segs = [spec(x, 2) for x in labs]
    else:
        a = block_labels(p, 2)
        segs = [spec(a, 2), spec(rng.permutation(a), 2), spec(a, 2)]
    return SimulationScenario(sim_id, T, p, changes, segs, notes)


def generate(scenario: SimulationScenario, seed: int = 0):
    """Draw ``Y_raw`` (``T x p``, may be negative) and the true change points."""
    rng = np.random.default_rng(seed)
    Y = np.empty((scenario.T, scenario.p))
    ridges = []
    cache: dict[CovarianceSpec, np.ndarray] = {}
    for spec, (lo, hi) in zip(scenario.segments, scenario.segment_bounds()):
        if spec not in cache:
            info: dict = {}
            cache[spec] = np.linalg.cholesky(build_sigma(spec, info=info))
            ridges.append(info["ridge"])
        Y[lo:hi] = rng.standard_normal((hi - lo, scenario.p)) @ cache[spec].T
    scenario.notes["ridge"] = max(ridges)
    return Y, list(scenario.change_points)


def simulate(sim_id: int, seed: int = 0, T: int | None = None, p: int | None = None):
    """Scenario plus data from one seed. Returns ``(Y_raw, truth, scenario)``."""
    from .nmf import derive_seed

    scenario = make_scenario(sim_id, derive_seed(seed, 0), T, p)
    Y, truth = generate(scenario, derive_seed(seed, 1))
    return Y, truth, scenario


def true_adjacency(labels) -> np.ndarray:
    labels = np.asarray(labels)
    A = (labels[:, None] == labels[None, :]).astype(np.int8)
    np.fill_diagonal(A, 0)
    return A
