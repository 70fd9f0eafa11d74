"""Accuracy metrics for landmark indicators and segmentations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import PolygonalChain, convex_hull


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int


def confusion(gamma_true, gamma_hat) -> ConfusionMatrix:
    t = np.asarray(gamma_true).astype(bool)
    h = np.asarray(gamma_hat).astype(bool)
    if t.shape != h.shape:
        raise ValueError("indicator vectors differ in length")
    return ConfusionMatrix(int(np.sum(t & h)), int(np.sum(~t & ~h)),
                           int(np.sum(~t & h)), int(np.sum(t & ~h)))


def mcc(gamma_true, gamma_hat) -> float:
    """Matthews correlation coefficient; 0 when any marginal is empty."""
    c = confusion(gamma_true, gamma_hat)
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def pair_counts(z_true, z_hat) -> tuple[int, int, int, int]:
    """(N1, N2, N3, N4): pairs together in both, only in truth, only in estimate, in neither."""
    a = np.asarray(z_true)
    b = np.asarray(z_hat)
    if a.shape != b.shape:
        raise ValueError("partitions differ in length")
    n = len(a)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def pairs(c):
        return int((c * (c - 1) // 2).sum())

    n1 = pairs(table)
    same_true = pairs(table.sum(axis=1))
    same_hat = pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    n2 = same_true - n1
    n3 = same_hat - n1
    return n1, n2, n3, total - n1 - n2 - n3


def ari(z_true, z_hat) -> float:
    """Adjusted Rand index from pair counts, in exact arithmetic."""
    n1, n2, n3, n4 = pair_counts(z_true, z_hat)
    total = n1 + n2 + n3 + n4
    expected = (n1 + n2) * (n1 + n3) + (n3 + n4) * (n2 + n4)
    num = total * (n1 + n4) - expected
    den = total * total - expected
    if den == 0:
        # both partitions trivial (all singletons or one block)
        return 1.0 if n2 == n3 == 0 else 0.0
    return float(Fraction(num, den))


def windowed_match(gamma_true, gamma_hat, window: int = 5) -> ConfusionMatrix:
    """Greedy one-to-one matching of predicted to true landmarks within a circular window."""
    t = np.flatnonzero(gamma_true)
    h = np.flatnonzero(gamma_hat)
    m = len(gamma_true)
    if len(gamma_hat) != m:
        raise ValueError("indicator vectors differ in length")
    cands = []
    for i in h:
        for j in t:
            dist = min((i - j) % m, (j - i) % m)
            if dist <= window:
                cands.append((dist, int(j), int(i)))
    cands.sort()
    used_t, used_h = set(), set()
    for _, j, i in cands:
        if j not in used_t and i not in used_h:
            used_t.add(j)
            used_h.add(i)
    tp = len(used_t)
    fp = len(h) - tp
    fn = len(t) - tp
    return ConfusionMatrix(tp, m - tp - fp - fn, fp, fn)


def convex_hull_baseline(chain: PolygonalChain) -> np.ndarray:
    g = np.zeros(len(chain), dtype=np.int8)
    g[convex_hull(chain)] = 1
    return g


def segment_labels(gamma) -> np.ndarray:
    """Cumulative-sum labels for any indicator vector, without validity checks.

    Used to score estimates (such as hull vertices) that may break the
    model constraints.
    """
    g = np.asarray(gamma).astype(np.int64)
    z = np.cumsum(g)
    z[z == 0] = max(int(g.sum()), 1)
    return z
