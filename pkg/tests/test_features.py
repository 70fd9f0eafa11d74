import math

import numpy as np
import pytest

from landmark_shape.features import (
    chain_feature_columns,
    chain_feature_row,
    piecewise_distances,
    radial_distances,
    roughness_measures,
    segment_feature_rows,
    sign_states,
    summarize_moments,
    transition_probabilities,
    tumor_boundary_roughness,
    zero_crossing_count,
)
from landmark_shape.geometry import PolygonalChain
from landmark_shape.model import ConstraintViolation

import oracles


def test_roughness_hand_example():
    r = roughness_measures([1, -1, 2, -2])
    assert r.ra == 1.5
    assert r.rq == pytest.approx(math.sqrt(2.5))
    assert (r.rv, r.rp, r.rz) == (2.0, 2.0, 4.0)
    # symmetric profile: no skew; kurtosis = mean(d^4) / rq^4 = 8.5 / 6.25
    assert r.rsk == pytest.approx(0.0)
    assert r.rku == pytest.approx(8.5 / 6.25)
    # two peaks (2, 1) and two valleys (-2, -1): (4 + 2) / 2
    assert r.rzjis == pytest.approx(3.0)


def test_rzjis_five_extremes():
    d = np.arange(-6, 7, dtype=float)  # -6..6
    # top five peaks 6..2, bottom five valleys -6..-2: each pair spans 2p
    assert roughness_measures(d).rzjis == pytest.approx((12 + 10 + 8 + 6 + 4) / 5)


def test_roughness_zero_profile():
    r = roughness_measures(np.zeros(5))
    assert (r.ra, r.rq, r.rv, r.rp, r.rz, r.rzjis) == (0, 0, 0, 0, 0, 0)
    assert math.isnan(r.rsk) and math.isnan(r.rku)


def test_roughness_single_point():
    r = roughness_measures([0.3])
    assert r.rz == r.rv + r.rp
    assert r.rzjis == 0.0


def test_sign_states_zero_handling():
    assert sign_states([0.1, -0.2, 0.0]) == "+-+"
    assert sign_states([0.1, -0.2, 0.0], zero_state="-") == "+--"
    with pytest.raises(ValueError):
        sign_states([1.0], zero_state="0")


def test_transition_hand_example():
    t = transition_probabilities("++-+")
    assert (t.a_pp, t.a_pm, t.a_mp) == (0.5, 0.5, 1.0)
    assert t.a_mm == 0.0


def test_transition_undefined_rows():
    t = transition_probabilities("+++")
    assert (t.a_pp, t.a_pm) == (1.0, 0.0)
    assert math.isnan(t.a_mp) and math.isnan(t.a_mm)
    t = transition_probabilities("-")
    assert all(math.isnan(v) for v in (t.a_pp, t.a_pm, t.a_mp, t.a_mm))


def test_radial_unit_square():
    r = radial_distances(PolygonalChain([(0, 0), (1, 0), (1, 1), (0, 1)]))
    np.testing.assert_allclose(r, math.sqrt(0.5))


def test_zcc_hand_example():
    assert zero_crossing_count([1, 3, 1, 3]) == 4
    assert zero_crossing_count([1, 1, 1]) == 0


def test_tbr_hand_example():
    assert tumor_boundary_roughness([0, 1, 0, 1], 4) == 3.0
    # two windows of length 2: |1-0| and |1-0| -> RI = (1, 1)
    assert tumor_boundary_roughness([0, 1, 0, 1], 2) == 1.0
    with pytest.raises(ValueError):
        tumor_boundary_roughness([0, 1, 0, 1], 5)
    with pytest.raises(ValueError):
        tumor_boundary_roughness([0, 1, 0, 1], 1)


def test_moments_hand_example():
    s = summarize_moments([1, 2, 3, 4])
    assert s.mean == 2.5
    assert s.sd == pytest.approx(1.2910, abs=1e-4)
    assert s.skew == pytest.approx(0.0)
    # population kurtosis of 1..4: mean(c^4) / mean(c^2)^2 = 2.5625 / 1.5625
    assert s.kurt == pytest.approx(2.5625 / 1.5625)


def test_moments_nan_rules():
    s = summarize_moments([1.0, math.nan])
    assert s.mean == 1.0 and math.isnan(s.sd)
    assert all(math.isnan(v) for v in vars(summarize_moments([math.nan])).values())


def _ten_vertex_chain():
    # triangle corners at 0, 3, 6 with off-edge points of known offset
    pts = [(0, 0), (1, -0.1), (2, 0.2), (3, 0), (2.5, 1), (2.2, 2.3), (1.5, 3),
           (1, 2), (0.3, 1.1), (0.2, 0.3)]
    return PolygonalChain(pts)


def test_piecewise_matches_per_vertex_hand_computation():
    c = _ten_vertex_chain()
    g = (1, 0, 0, 1, 0, 0, 1, 0, 0, 0)
    got = piecewise_distances(c, g)
    want = oracles.signed_segment_distances([tuple(p) for p in c.vertices], g)
    assert [len(d) for d in got] == [2, 2, 3]
    for a, b in zip(got, want):
        np.testing.assert_allclose(a, b, atol=1e-14)
    # (1, -0.1) lies below the base edge y = 0: outside, +0.1
    assert got[0][0] == pytest.approx(0.1)
    assert got[0][1] == pytest.approx(-0.2)
    with pytest.raises(ConstraintViolation):
        piecewise_distances(c, (1, 1, 0, 1, 0, 0, 1, 0, 0, 0))


def test_segment_rows_and_chain_row():
    c = _ten_vertex_chain()
    g = (1, 0, 0, 1, 0, 0, 1, 0, 0, 0)
    rows = segment_feature_rows(c, g)
    assert [(r["start_landmark"], r["end_landmark"]) for r in rows] == [(1, 4), (4, 7), (7, 1)]
    row = chain_feature_row(c, rows, tbr_windows=(5, 50))
    assert set(chain_feature_columns((5, 50))) == set(row)
    assert row["K"] == 3 and row["n_vertices"] == 10
    assert math.isnan(row["tbr_L50"])
    ra = summarize_moments([r["ra"] for r in rows])
    assert row["ra_mean"] == ra.mean and row["ra_sd"] == ra.sd
    scaled = segment_feature_rows(c, g, scale=10.0)
    assert scaled[0]["ra"] == pytest.approx(10 * rows[0]["ra"])
