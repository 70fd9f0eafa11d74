import numpy as np
import pytest

from landmark_shape.geometry import PolygonalChain
from landmark_shape.metrics import (
    ari,
    confusion,
    convex_hull_baseline,
    mcc,
    pair_counts,
    segment_labels,
    windowed_match,
)

import oracles


def _vectors(tp, tn, fp, fn):
    t = [1] * tp + [0] * tn + [0] * fp + [1] * fn
    h = [1] * tp + [0] * tn + [1] * fp + [0] * fn
    return t, h


def test_mcc_hand_example():
    # (2*5 - 1*1) / sqrt(3*3*6*6) = 9 / 18
    t, h = _vectors(2, 5, 1, 1)
    assert confusion(t, h) == confusion(t, h)
    assert (confusion(t, h).tp, confusion(t, h).fp) == (2, 1)
    assert mcc(t, h) == pytest.approx(0.5)


def test_mcc_identity_and_degenerate():
    g = [1, 0, 0, 1, 0, 0, 1, 0]
    assert mcc(g, g) == 1.0
    assert mcc(g, [0] * 8) == 0.0
    with pytest.raises(ValueError):
        mcc([1, 0], [1, 0, 0])


def test_ari_identity_and_relabeling():
    z = [1, 1, 2, 2, 2, 3, 3, 1]
    assert ari(z, z) == 1.0
    assert ari(z, [7 if v == 1 else 9 if v == 2 else 4 for v in z]) == 1.0


def test_pair_counts_sum():
    rng = np.random.default_rng(0)
    u = rng.integers(0, 4, 30)
    v = rng.integers(0, 3, 30)
    assert sum(pair_counts(u, v)) == 30 * 29 // 2


def test_ari_chance_level():
    rng = np.random.default_rng(1)
    vals = [ari(rng.integers(0, 5, 100), rng.integers(0, 5, 100)) for _ in range(100)]
    assert abs(np.mean(vals)) < 0.05


def test_ari_matches_both_oracles():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        u = list(rng.integers(0, int(rng.integers(1, 6)), n))
        v = list(rng.integers(0, int(rng.integers(1, 6)), n))
        want = oracles.brute_ari(u, v)
        assert ari(u, v) == want
        assert oracles.contingency_ari(u, v) == pytest.approx(want, abs=1e-12)


def test_windowed_match_two_near_one_truth():
    t = np.zeros(30, np.int8)
    t[10] = 1
    h = np.zeros(30, np.int8)
    h[[9, 12]] = 1
    w = windowed_match(t, h)
    assert (w.tp, w.fp, w.fn) == (1, 1, 0)


def test_windowed_match_circular_and_window():
    t = np.zeros(30, np.int8)
    t[[0, 15]] = 1
    h = np.zeros(30, np.int8)
    h[[28, 22]] = 1
    w = windowed_match(t, h, window=5)
    assert (w.tp, w.fp, w.fn) == (1, 1, 1)
    assert windowed_match(t, h, window=7).tp == 2


def test_hull_baseline_star():
    k = 5
    ang = np.arange(2 * k) * np.pi / k
    r = np.where(np.arange(2 * k) % 2 == 0, 1.0, 0.5)
    g = convex_hull_baseline(PolygonalChain(np.column_stack([r * np.cos(ang), r * np.sin(ang)])))
    assert list(np.flatnonzero(g)) == [0, 2, 4, 6, 8]


def test_segment_labels_permissive():
    # adjacent ones are allowed for scoring
    assert list(segment_labels([1, 1, 0, 0])) == [1, 2, 2, 2]
    assert list(segment_labels([0, 1, 0, 1])) == [2, 1, 1, 2]
    assert list(segment_labels([0, 0, 0])) == [1, 1, 1]
