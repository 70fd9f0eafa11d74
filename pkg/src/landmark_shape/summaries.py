"""Point estimates and credible intervals from MCMC traces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .model import gamma_to_z
from .sampler import McmcTrace

DENSE_PPM_LIMIT = 20000


class UndefinedCorrelation(ValueError):
    """A vector with zero variance has no Pearson correlation."""


def _as_traces(traces) -> list[McmcTrace]:
    if isinstance(traces, McmcTrace):
        traces = [traces]
    traces = list(traces)
    if not traces or any(len(t) == 0 for t in traces):
        raise ValueError("need at least one non-empty trace")
    if len({t.m for t in traces}) != 1:
        raise ValueError("traces disagree on the number of vertices")
    return traces


def _gamma(L, m) -> np.ndarray:
    g = np.zeros(m, dtype=np.int8)
    g[list(L)] = 1
    return g


def map_estimate(trace) -> np.ndarray:
    """Sample with the highest log posterior; earliest wins ties.

    A list of traces is pooled in chain order.
    """
    traces = _as_traces(trace)
    best, best_lp = None, -np.inf
    for tr in traces:
        b = int(np.argmax(tr.log_post))
        if tr.log_post[b] > best_lp:
            best, best_lp = tr.landmark_sets[b], tr.log_post[b]
    return _gamma(best, traces[0].m)


def _unique_samples(traces: list[McmcTrace]):
    """Distinct landmark sets in first-seen order with their counts."""
    index: dict[tuple, int] = {}
    counts: list[int] = []
    for tr in traces:
        for L in tr.landmark_sets:
            u = index.get(L)
            if u is None:
                index[L] = len(counts)
                counts.append(1)
            else:
                counts[u] += 1
    return list(index), np.array(counts, dtype=float)


def _association(z: np.ndarray) -> np.ndarray:
    return (z[:, None] == z[None, :]).astype(np.int64)


@dataclass
class Ppm:
    """Posterior pairwise co-segmentation probabilities.

    Dense for chains up to ``DENSE_PPM_LIMIT`` vertices; beyond that entries
    are computed on request from the distinct sampled partitions.
    """

    m: int
    sets: list[tuple[int, ...]]
    weights: np.ndarray
    matrix: np.ndarray | None = None

    def __getitem__(self, ij):
        i, j = ij
        if self.matrix is not None:
            return self.matrix[i, j]
        return float(sum(w for L, w in zip(self.sets, self.weights)
                         if _label(L, i, self.m) == _label(L, j, self.m)))

    def rows(self, rows: Sequence[int]) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[list(rows)]
        out = np.zeros((len(rows), self.m))
        for L, w in zip(self.sets, self.weights):
            z = gamma_to_z(_gamma(L, self.m))
            out += w * (z[list(rows), None] == z[None, :])
        return out


def _label(L, i, m):
    # segment of vertex i = number of landmarks <= i, with 0 meaning the last segment
    k = int(np.searchsorted(np.asarray(L), i, side="right"))
    return k if k > 0 else len(L)


def compute_ppm(traces, dense: bool | None = None) -> Ppm:
    traces = _as_traces(traces)
    m = traces[0].m
    sets, counts = _unique_samples(traces)
    weights = counts / counts.sum()
    if dense is None:
        dense = m <= DENSE_PPM_LIMIT
    mat = None
    if dense:
        # integer co-segmentation counts, one division: the diagonal is exactly 1
        acc = np.zeros((m, m), dtype=np.int64)
        for L, c in zip(sets, counts):
            acc += int(c) * _association(gamma_to_z(_gamma(L, m)))
        mat = acc / counts.sum()
    return Ppm(m, sets, weights, mat)


def _pairs_same(z: np.ndarray) -> int:
    _, c = np.unique(z, return_counts=True)
    return int((c * (c - 1) // 2).sum())


def _pairs_both(z1: np.ndarray, z2: np.ndarray) -> int:
    K2 = int(z2.max()) + 1
    _, c = np.unique(z1.astype(np.int64) * K2 + z2, return_counts=True)
    return int((c * (c - 1) // 2).sum())


def dahl_losses(ppm: Ppm, traces) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Squared-deviation loss of each distinct sampled partition, first-seen order."""
    traces = _as_traces(traces)
    m = traces[0].m
    sets, _ = _unique_samples(traces)
    zs = [gamma_to_z(_gamma(L, m)) for L in sets]
    if ppm.matrix is not None:
        iu = np.triu_indices(m, 1)
        c = ppm.matrix[iu]
        losses = np.array([float(((z[iu[0]] == z[iu[1]]) - c) @ ((z[iu[0]] == z[iu[1]]) - c))
                           for z in zs])
        return sets, losses
    # expand the square without materializing the matrix:
    # sum (d - c)^2 = sum d - 2 sum d c + sum c^2, where sum d c is a
    # weighted count of pairs co-segmented in both partitions
    pz = [gamma_to_z(_gamma(L, m)) for L in ppm.sets]
    pw = ppm.weights
    c2 = sum(wa * wb * _pairs_both(za, zb)
             for za, wa in zip(pz, pw) for zb, wb in zip(pz, pw))
    losses = np.array([
        _pairs_same(z) - 2.0 * sum(w * _pairs_both(z, zu) for zu, w in zip(pz, pw)) + c2
        for z in zs])
    return sets, losses


def dahl_estimate(ppm: Ppm, traces) -> np.ndarray:
    """Sampled partition closest to the PPM in squared error; earliest wins ties."""
    sets, losses = dahl_losses(ppm, traces)
    return _gamma(sets[int(np.argmin(losses))], ppm.m)


def pearson_neg_corr_pvalue(a, b) -> float:
    """One-sided p-value for a negative Pearson correlation between ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    B = len(a)
    if len(b) != B or B < 3:
        raise ValueError("need two vectors of equal length >= 3")
    da = a - a.mean()
    db = b - b.mean()
    sa, sb = float(da @ da), float(db @ db)
    if sa == 0 or sb == 0:
        raise UndefinedCorrelation("zero variance")
    r = float(da @ db) / np.sqrt(sa * sb)
    r = min(1.0, max(-1.0, r))
    if r == -1.0:
        return 0.0
    if r == 1.0:
        return 1.0
    df = B - 2
    t = r * np.sqrt(df / (1.0 - r * r))
    tail = 0.5 * betainc(0.5 * df, 0.5, df / (df + t * t))
    return float(tail if t < 0 else 1.0 - tail)


@dataclass(frozen=True)
class CredibleInterval:
    landmark: int
    lo: int
    hi: int
    left: int
    right: int

    def contains(self, i: int, m: int) -> bool:
        return (i - self.landmark) % m <= self.right or (self.landmark - i) % m <= self.left


def _columns(traces: list[McmcTrace]):
    sets, _ = _unique_samples(traces)
    where = {L: u for u, L in enumerate(sets)}
    inverse = np.array([where[L] for tr in traces for L in tr.landmark_sets])
    members = [frozenset(L) for L in sets]

    def column(j: int) -> np.ndarray:
        per_unique = np.array([j in s for s in members], dtype=float)
        return per_unique[inverse]

    return column


def credible_intervals(traces, point_estimate, alpha: float = 0.05) -> list[CredibleInterval]:
    """Grow each landmark's interval over neighbours whose samples anticorrelate with it."""
    traces = _as_traces(traces)
    m = traces[0].m
    column = _columns(traces)
    max_reach = (m - 1) // 2
    out = []
    for t in np.flatnonzero(np.asarray(point_estimate)):
        t = int(t)
        ct = column(t)
        reach = []
        for sign in (-1, 1):
            u = 0
            while u < max_reach:
                try:
                    p = pearson_neg_corr_pvalue(ct, column((t + sign * (u + 1)) % m))
                except UndefinedCorrelation:
                    break
                if p >= alpha:
                    break
                u += 1
            reach.append(u)
        left, right = reach
        if left + right >= m - 1:
            right = m - 2 - left
        out.append(CredibleInterval(t, (t - left) % m, (t + right) % m, left, right))
    return out
