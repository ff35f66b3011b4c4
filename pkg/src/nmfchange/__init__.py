"""Change points in the clustering structure of multivariate time series via NMF."""

__version__ = "0.1.0"

from .config import DetectorConfig
from .dataio import emit, ingest, read_result, shift_nonneg
from .exceptions import ConfigurationError, DivergenceUndefined, IngestionError, NumericalFailure
from .inference import confirm_candidates, permute_segment, refit_losses, welch_test
from .metrics import adjacency_overlap, evaluate, hausdorff, tp_fp
from .netest import cluster_cut, consensus, graph_density, run_adjacency, threshold_adjacency
from .nmf import Factorization, FitSettings, fit_best, fit_once, loss_of, update_step
from .pipeline import DetectionResult, detect, result_document, segment_networks
from .rank import find_optimal_rank, permute_per_column
from .segmentation import SearchWindow, binary_search_candidate, discover_candidates
from .simlab import build_sigma, generate, make_scenario, simulate

__all__ = [
    "DetectorConfig", "emit", "ingest", "read_result", "shift_nonneg",
    "ConfigurationError", "DivergenceUndefined", "IngestionError", "NumericalFailure",
    "confirm_candidates", "permute_segment", "refit_losses", "welch_test",
    "adjacency_overlap", "evaluate", "hausdorff", "tp_fp",
    "cluster_cut", "consensus", "graph_density", "run_adjacency", "threshold_adjacency",
    "Factorization", "FitSettings", "fit_best", "fit_once", "loss_of", "update_step",
    "DetectionResult", "detect", "result_document", "segment_networks",
    "find_optimal_rank", "permute_per_column",
    "SearchWindow", "binary_search_candidate", "discover_candidates",
    "build_sigma", "generate", "make_scenario", "simulate",
]
