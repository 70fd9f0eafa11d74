"""Landmark indicators, segment labels, and the marginalized posterior.

Indices are 0-based throughout the Python API; segment labels run 1..K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    EPS,
    PolygonalChain,
    is_self_intersecting,
    line_through,
    points_in_polygon,
)

LOG_2PI = math.log(2.0 * math.pi)


class ConstraintViolation(ValueError):
    """A landmark configuration that has zero prior probability."""


@dataclass(frozen=True)
class Hyperparameters:
    alpha_omega: float
    beta_omega: float
    alpha_sigma: float = 3.0
    beta_sigma: float = 0.01
    k_hat: float = 3.0

    def __post_init__(self):
        for name in ("alpha_omega", "beta_omega", "alpha_sigma", "beta_sigma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")

    @classmethod
    def default(cls, m: int, k_hat: float = 3.0, alpha_sigma: float = 3.0,
                beta_sigma: float | None = None) -> "Hyperparameters":
        """Recommended setting for a chain with ``m`` distinct vertices.

        ``n = m + 1`` counts the closing vertex, so ``beta_sigma`` defaults
        to ``1 / m``.
        """
        n = m + 1
        if not 0 < k_hat < n:
            raise ValueError(f"k_hat must lie in (0, {n}), got {k_hat}")
        return cls(
            alpha_omega=2.0 * k_hat / n,
            beta_omega=2.0 * (1.0 - k_hat / n),
            alpha_sigma=alpha_sigma,
            beta_sigma=1.0 / m if beta_sigma is None else beta_sigma,
            k_hat=k_hat,
        )


def as_gamma(gamma) -> np.ndarray:
    g = np.asarray(gamma)
    if g.ndim != 1 or not np.all((g == 0) | (g == 1)):
        raise ConstraintViolation("gamma must be a binary vector")
    return g.astype(np.int8)


def landmark_positions(gamma) -> np.ndarray:
    return np.flatnonzero(as_gamma(gamma))


def _check_structure(g: np.ndarray) -> None:
    K = int(g.sum())
    if K < 3:
        raise ConstraintViolation(f"need at least 3 landmarks, got {K}")
    if np.any(g & np.roll(g, -1)):
        raise ConstraintViolation("two circularly adjacent landmarks")


def gamma_to_z(gamma) -> np.ndarray:
    g = as_gamma(gamma)
    _check_structure(g)
    z = np.cumsum(g, dtype=np.int64)
    z[z == 0] = g.sum()
    return z


def z_to_gamma(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    if z.ndim != 1 or len(z) == 0:
        raise ConstraintViolation("z must be a non-empty vector")
    g = z - np.roll(z, 1)
    g[g < 0] = 1
    if not np.all((g == 0) | (g == 1)):
        raise ConstraintViolation("segment labels are not contiguous runs")
    g = g.astype(np.int8)
    _check_structure(g)
    if not np.array_equal(gamma_to_z(g), z):
        raise ConstraintViolation("segment labels are not contiguous runs")
    return g


def landmark_polygon(chain: PolygonalChain, landmarks) -> np.ndarray:
    return chain.vertices[np.asarray(landmarks, dtype=int)]


def is_valid_gamma(gamma, chain: PolygonalChain) -> bool:
    g = np.asarray(gamma)
    if len(g) != len(chain):
        raise ValueError("gamma length must equal the number of chain vertices")
    try:
        _check_structure(as_gamma(g))
    except ConstraintViolation:
        return False
    return not is_self_intersecting(landmark_polygon(chain, np.flatnonzero(g)))


def segment_vertex_indices(landmarks, m: int) -> list[np.ndarray]:
    """Non-landmark vertex indices of each segment, in segment order."""
    L = list(landmarks)
    K = len(L)
    out = []
    for k in range(K):
        a, b = L[k], L[(k + 1) % K]
        span = (b - a) % m or m
        out.append((a + np.arange(1, span)) % m)
    return out


def segment_distances(chain: PolygonalChain, landmarks) -> list[np.ndarray]:
    """Signed shortest distances of each segment's non-landmark vertices.

    Positive outside the landmark polygon, negative inside; distances
    below the boundary tolerance are exactly zero.
    """
    xy = chain.vertices
    L = list(landmarks)
    K = len(L)
    poly = xy[L]
    segs = segment_vertex_indices(L, len(xy))
    out = []
    for k, idx in enumerate(segs):
        A, B, C = line_through(xy[L[k]], xy[L[(k + 1) % K]])
        pts = xy[idx]
        d = np.abs(A * pts[:, 0] - B * pts[:, 1] + C) / math.hypot(A, B)
        d[d < EPS] = 0.0
        inside = points_in_polygon(pts, poly)
        out.append(np.where(inside, -d, d))
    return out


def segment_log_marglik_ss(n_k: int, ss: float, hyper: Hyperparameters) -> float:
    """Segment log marginal likelihood from its size and sum of squared distances."""
    a, b = hyper.alpha_sigma, hyper.beta_sigma
    half = 0.5 * n_k
    return (-half * LOG_2PI + math.lgamma(a + half) - math.lgamma(a)
            + a * math.log(b) - (a + half) * math.log(b + 0.5 * ss))


def segment_log_marglik(d_star, hyper: Hyperparameters) -> float:
    """Log marginal density of one segment's distances with the variance integrated out."""
    d = np.asarray(d_star, dtype=float).ravel()
    if len(d) < 1:
        raise ValueError("a segment needs at least one non-landmark vertex")
    if not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite")
    return segment_log_marglik_ss(len(d), float(np.dot(d, d)), hyper)


def full_log_likelihood(chain: PolygonalChain, gamma, hyper: Hyperparameters) -> float:
    if not is_valid_gamma(gamma, chain):
        raise ConstraintViolation("gamma is not a valid landmark configuration")
    dists = segment_distances(chain, np.flatnonzero(gamma))
    return math.fsum(segment_log_marglik(d, hyper) for d in dists)


def log_prior_k(K: int, N: int, hyper: Hyperparameters) -> float:
    """Beta-Bernoulli log prior of one configuration with K ones among N entries."""
    a, b = hyper.alpha_omega, hyper.beta_omega
    return (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
            + math.lgamma(a + K) + math.lgamma(b + N - K) - math.lgamma(a + b + N))


def log_prior(gamma, hyper: Hyperparameters, chain: PolygonalChain | None = None) -> float:
    """Log prior of ``gamma``; ``-inf`` for zero-prior configurations.

    The polygon-simplicity constraint needs ``chain``; without it only the
    count and adjacency constraints are checked.
    """
    g = as_gamma(gamma)
    if chain is not None:
        if not is_valid_gamma(g, chain):
            return -math.inf
    else:
        try:
            _check_structure(g)
        except ConstraintViolation:
            return -math.inf
    return log_prior_k(int(g.sum()), len(g), hyper)


def log_posterior(chain: PolygonalChain, gamma, hyper: Hyperparameters) -> float:
    """Unnormalized log posterior of ``gamma``."""
    g = as_gamma(gamma)
    if len(g) != len(chain) or not is_valid_gamma(g, chain):
        return -math.inf
    return log_prior_k(int(g.sum()), len(g), hyper) + full_log_likelihood(chain, g, hyper)
