"""Bayesian landmark detection on closed polygonal chains and piecewise roughness features."""

__version__ = "0.1.0"

from .geometry import PolygonalChain, normalize  # noqa: E402
from .model import Hyperparameters, log_posterior  # noqa: E402
from .sampler import SamplerConfig, run_chain, run_multi_chain  # noqa: E402
from .summaries import compute_ppm, credible_intervals, dahl_estimate, map_estimate  # noqa: E402

__all__ = [
    "PolygonalChain", "normalize", "Hyperparameters", "log_posterior",
    "SamplerConfig", "run_chain", "run_multi_chain",
    "compute_ppm", "credible_intervals", "dahl_estimate", "map_estimate",
]
