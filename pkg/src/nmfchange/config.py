"""Detector settings and presets."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from .exceptions import ConfigurationError
from .nmf import LOSS_KINDS, FitSettings


@dataclass(frozen=True)
class DetectorConfig:
    """Settings for the full detection pipeline.

    ``n_run`` restarts are used for rank selection, block fits in the search
    and consensus networks. ``n_reps`` refits (each ``refit_runs`` restarts)
    build the observed and permuted loss samples for every candidate.
    """

    delta: int = 50
    n_run: int = 100
    n_reps: int = 1000
    alpha: float = 0.001
    kind: str = "kl"
    rank: int | None = None
    seed: int = 0
    rank_range: tuple[int, ...] | None = None
    max_iter: int = 2000
    rel_tol: float = 1e-4
    refit_runs: int = 1
    permute_once: bool = False

    def __post_init__(self):
        if self.delta < 2:
            raise ConfigurationError("delta must be >= 2")
        if not 0 < self.alpha < 1:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if self.n_run < 1 or self.n_reps < 1 or self.refit_runs < 1:
            raise ConfigurationError("n_run, n_reps and refit_runs must be >= 1")
        if self.kind not in LOSS_KINDS:
            raise ConfigurationError(f"loss kind must be one of {LOSS_KINDS}")
        if self.rank is not None and self.rank < 1:
            raise ConfigurationError("rank must be a positive integer")
        if self.max_iter < 1 or not self.rel_tol > 0:
            raise ConfigurationError("max_iter must be >= 1 and rel_tol > 0")
        if self.rank_range is not None:
            object.__setattr__(self, "rank_range", tuple(int(r) for r in self.rank_range))

    @classmethod
    def paper(cls, **overrides) -> "DetectorConfig":
        """Full-size settings: 100 restarts, 1000 refits, alpha 0.001."""
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides) -> "DetectorConfig":
        """Reduced settings that run in seconds to minutes per series."""
        base = dict(n_run=20, n_reps=100, rank_range=tuple(range(2, 9)))
        base.update(overrides)
        return cls(**base)

    def fit_settings(self, seed: int, n_run: int | None = None) -> FitSettings:
        return FitSettings(self.n_run if n_run is None else n_run,
                           self.max_iter, self.rel_tol, seed)

    def with_(self, **changes) -> "DetectorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["rank_range"] is not None:
            d["rank_range"] = list(d["rank_range"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        return cls(**d)


PRESETS = {"paper": DetectorConfig.paper, "desk": DetectorConfig.desk}
