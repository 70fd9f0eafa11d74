import numpy as np
import pytest
from scipy import stats

from landmark_shape.model import Hyperparameters, gamma_to_z
from landmark_shape.sampler import McmcTrace, SamplerConfig, run_chain, run_multi_chain
from landmark_shape.summaries import (
    UndefinedCorrelation,
    compute_ppm,
    credible_intervals,
    dahl_estimate,
    dahl_losses,
    map_estimate,
    pearson_neg_corr_pvalue,
)

import oracles
from chains import oracle_chain


def _trace(m, sets, lps=None):
    sets = [tuple(s) for s in sets]
    lps = np.zeros(len(sets)) if lps is None else np.asarray(lps, float)
    return McmcTrace(m, sets, lps)


def _g(L, m):
    g = np.zeros(m, np.int8)
    g[list(L)] = 1
    return g


def test_map_single_sample():
    assert list(map_estimate(_trace(8, [(0, 3, 5)], [-1.0]))) == list(_g((0, 3, 5), 8))


def test_map_ties_earliest():
    tr = _trace(8, [(0, 3, 5), (1, 3, 6), (0, 3, 6), (1, 3, 6)], [-2.0, -1.0, -3.0, -1.0])
    assert list(np.flatnonzero(map_estimate(tr))) == [1, 3, 6]
    tr2 = _trace(8, [(0, 3, 5), (0, 2, 5), (1, 3, 6)], [-1.0, -1.0, -1.0])
    assert list(np.flatnonzero(map_estimate(tr2))) == [0, 3, 5]


def test_map_pools_chains_in_order():
    a = _trace(8, [(0, 3, 5)], [-1.0])
    b = _trace(8, [(1, 3, 6)], [-1.0])
    assert list(np.flatnonzero(map_estimate([a, b]))) == [0, 3, 5]
    with pytest.raises(ValueError):
        map_estimate([])


def test_map_finds_enumeration_mode():
    c = oracle_chain(0)
    h = Hyperparameters.default(len(c), beta_sigma=1e-3)
    probs, table = oracles.enumerate_posterior(c.vertices, h)
    mode = max(table, key=table.get)
    tr = run_chain(c, h, SamplerConfig(iterations=20 * 13 * 100, seed=0, n_chains=1))
    assert tuple(map_estimate(tr)) == mode


def _ppm_oracle(m, sets):
    out = np.zeros((m, m))
    for L in sets:
        z = gamma_to_z(_g(L, m))
        for i in range(m):
            for j in range(m):
                out[i, j] += z[i] == z[j]
    return out / len(sets)


def test_ppm_matches_oracle_and_invariants():
    m = 10
    sets = [(0, 3, 7), (0, 3, 7), (1, 4, 7), (0, 5, 8), (2, 5, 8)]
    ppm = compute_ppm(_trace(m, sets))
    want = _ppm_oracle(m, sets)
    np.testing.assert_allclose(ppm.matrix, want, atol=1e-15)
    np.testing.assert_array_equal(ppm.matrix, ppm.matrix.T)
    np.testing.assert_array_equal(np.diag(ppm.matrix), 1.0)
    assert ppm.matrix.min() >= 0 and ppm.matrix.max() <= 1


def test_ppm_identical_samples_is_association():
    m = 10
    ppm = compute_ppm(_trace(m, [(0, 3, 7)] * 4))
    z = np.array([1, 1, 1, 2, 2, 2, 2, 3, 3, 3])
    np.testing.assert_array_equal(ppm.matrix, (z[:, None] == z[None, :]).astype(float))


def test_streaming_ppm_matches_dense():
    c = oracle_chain(3)
    traces = run_multi_chain(c, Hyperparameters.default(len(c)), SamplerConfig(iterations=600, seed=2, n_chains=2))
    dense = compute_ppm(traces)
    lazy = compute_ppm(traces, dense=False)
    assert lazy.matrix is None
    np.testing.assert_allclose(lazy.rows(range(len(c))), dense.matrix, atol=1e-12)
    assert lazy[2, 9] == pytest.approx(dense[2, 9])
    _, l_dense = dahl_losses(dense, traces)
    _, l_lazy = dahl_losses(lazy, traces)
    np.testing.assert_allclose(l_lazy, l_dense, atol=1e-9)
    assert list(dahl_estimate(lazy, traces)) == list(dahl_estimate(dense, traces))


def test_dahl_three_samples_medoid():
    # hand check: with samples A, B, C the PPM sits closest to B, the middle one
    m = 8
    A, B, C = (0, 3, 5), (0, 3, 6), (1, 3, 6)
    tr = _trace(m, [A, B, C])
    ppm = compute_ppm(tr)
    sets, losses = dahl_losses(ppm, tr)
    c = _ppm_oracle(m, [A, B, C])
    full = []
    for L in (A, B, C):
        z = gamma_to_z(_g(L, m))
        d = (z[:, None] == z[None, :]).astype(float)
        full.append(((d - c) ** 2).sum())
    # oracle sums the full matrix; the package sums the upper triangle
    np.testing.assert_allclose(2 * losses, full, atol=1e-12)
    assert int(np.argmin(full)) == 1
    assert tuple(np.flatnonzero(dahl_estimate(ppm, tr))) == B


def test_pvalue_matches_scipy():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(300):
        B = int(rng.integers(5, 60))
        a = rng.integers(0, 2, B)
        b = rng.integers(0, 2, B)
        if a.std() == 0 or b.std() == 0:
            with pytest.raises(UndefinedCorrelation):
                pearson_neg_corr_pvalue(a, b)
            continue
        want = stats.pearsonr(a, b, alternative="less").pvalue
        assert pearson_neg_corr_pvalue(a, b) == pytest.approx(want, abs=1e-6)
        checked += 1
    assert checked > 200


def test_pvalue_extremes():
    a = np.array([1, 0, 1, 0, 1, 0])
    assert pearson_neg_corr_pvalue(a, 1 - a) == 0.0
    assert pearson_neg_corr_pvalue(a, a) == 1.0
    with pytest.raises(ValueError):
        pearson_neg_corr_pvalue([1, 0], [0, 1])


def test_pvalue_uniform_under_independence():
    rng = np.random.default_rng(1)
    ps = []
    while len(ps) < 2000:
        a = rng.normal(size=30)
        b = rng.normal(size=30)
        ps.append(pearson_neg_corr_pvalue(a, b))
    assert stats.kstest(ps, "uniform").pvalue > 0.01


def test_credible_interval_constructed():
    m = 10
    sets = [(0, 3, 6)] * 20 + [(0, 2, 6)] * 10 + [(0, 4, 6)] * 10
    tr = _trace(m, sets)
    [ci0, ci3, ci6] = credible_intervals(tr, _g((0, 3, 6), m))
    assert (ci3.lo, ci3.hi, ci3.left, ci3.right) == (2, 4, 1, 1)
    # landmarks 0 and 6 never move: neighbours have zero variance, interval is a point
    assert (ci0.lo, ci0.hi) == (0, 0)
    assert (ci6.lo, ci6.hi) == (6, 6)


def test_credible_intervals_contain_landmarks():
    c = oracle_chain(4)
    h = Hyperparameters.default(len(c))
    traces = run_multi_chain(c, h, SamplerConfig(iterations=3000, seed=4, n_chains=2))
    est = map_estimate(traces)
    m = len(c)
    for ci in credible_intervals(traces, est):
        assert ci.contains(ci.landmark, m)
        assert ci.left + ci.right + 1 < m
        assert ci.lo == (ci.landmark - ci.left) % m and ci.hi == (ci.landmark + ci.right) % m
