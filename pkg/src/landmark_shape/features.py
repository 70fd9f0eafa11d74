"""Piecewise boundary-roughness features and radial baselines.

Undefined quantities are reported as NaN.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import PolygonalChain, shoelace_area
from .model import ConstraintViolation, is_valid_gamma, segment_distances

ROUGHNESS_FIELDS = ("ra", "rq", "rv", "rp", "rz", "rsk", "rku", "rzjis")
TRANSITION_FIELDS = ("a_pp", "a_pm", "a_mp", "a_mm")
MOMENT_FIELDS = ("mean", "sd", "skew", "kurt")
DEFAULT_TBR_WINDOWS = (5, 50, 200)


def piecewise_distances(chain: PolygonalChain, gamma) -> list[np.ndarray]:
    """Signed distances per segment, segment k starting at the k-th landmark."""
    if not is_valid_gamma(gamma, chain):
        raise ConstraintViolation("gamma is not a valid landmark configuration")
    return segment_distances(chain, np.flatnonzero(gamma))


@dataclass(frozen=True)
class RoughnessVector:
    ra: float
    rq: float
    rv: float
    rp: float
    rz: float
    rsk: float
    rku: float
    rzjis: float


def roughness_measures(d_star) -> RoughnessVector:
    d = np.asarray(d_star, dtype=float)
    n = len(d)
    if n < 1:
        raise ValueError("a segment needs at least one distance")
    ra = float(np.abs(d).sum() / n)
    # scaled so tiny profiles do not underflow below Ra
    amax = float(np.abs(d).max())
    rq = amax * math.sqrt(float((d / amax) @ (d / amax)) / n) if amax > 0 else 0.0
    rv = abs(float(d.min()))
    rp = float(d.max())
    if rq > 0:
        u = d / rq
        rsk = float((u ** 3).sum() / n)
        rku = float((u ** 4).sum() / n)
    else:
        rsk = rku = math.nan
    # short segments: average over as many disjoint peak/valley pairs as exist
    top = min(5, max(1, n // 2))
    s = np.sort(d)
    peaks = s[::-1][:top]
    valleys = s[:top]
    rzjis = float((peaks - valleys).sum() / top)
    return RoughnessVector(ra, rq, rv, rp, rv + rp, rsk, rku, rzjis)


def sign_states(d_star, zero_state: str = "+") -> str:
    """'+' outside the landmark polygon, '-' inside; zeros map to ``zero_state``."""
    if zero_state not in "+-" or len(zero_state) != 1:
        raise ValueError("zero_state must be '+' or '-'")
    zero = zero_state
    return "".join("+" if x > 0 else "-" if x < 0 else zero for x in np.asarray(d_star, float))


@dataclass(frozen=True)
class TransitionFeatures:
    a_pp: float
    a_pm: float
    a_mp: float
    a_mm: float


def transition_probabilities(states: str) -> TransitionFeatures:
    """Maximum-likelihood transition frequencies between consecutive sign states."""
    nan = math.nan
    if len(states) < 2:
        return TransitionFeatures(nan, nan, nan, nan)
    counts = {"++": 0, "+-": 0, "-+": 0, "--": 0}
    for a, b in zip(states, states[1:]):
        counts[a + b] += 1
    n_p = counts["++"] + counts["+-"]
    n_m = counts["-+"] + counts["--"]
    return TransitionFeatures(
        counts["++"] / n_p if n_p else nan,
        counts["+-"] / n_p if n_p else nan,
        counts["-+"] / n_m if n_m else nan,
        counts["--"] / n_m if n_m else nan,
    )


def radial_distances(chain: PolygonalChain) -> np.ndarray:
    xy = chain.vertices
    return np.hypot(*(xy - xy.mean(axis=0)).T)


def zero_crossing_count(r) -> int:
    r = np.asarray(r, dtype=float)
    if len(r) < 2:
        raise ValueError("need at least two radial distances")
    c = r - r.mean()
    return int(np.count_nonzero(c * np.roll(c, -1) < 0))


def tumor_boundary_roughness(r, L: int) -> float:
    """Mean over windows of length ``L`` of the within-window absolute radial steps."""
    r = np.asarray(r, dtype=float)
    m = len(r)
    if L < 2:
        raise ValueError("window length must be at least 2")
    if L > m:
        raise ValueError(f"window length {L} exceeds the {m} vertices")
    steps = np.abs(np.diff(r))
    n_win = math.ceil(m / L)
    ri = [steps[j * L:min((j + 1) * L - 1, m - 1)].sum() for j in range(n_win)]
    return float(np.mean(ri))


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    sd: float
    skew: float
    kurt: float


def summarize_moments(values) -> MomentSummary:
    """Mean, sample sd, and population skewness/kurtosis of the defined values."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    nan = math.nan
    if len(v) == 0:
        return MomentSummary(nan, nan, nan, nan)
    mean = float(v.mean())
    sd = float(v.std(ddof=1)) if len(v) > 1 else nan
    c = v - mean
    m2 = float((c ** 2).mean())
    if len(v) < 3 or m2 == 0:
        return MomentSummary(mean, sd, nan, nan)
    skew = float((c ** 3).mean() / m2 ** 1.5)
    kurt = float((c ** 4).mean() / m2 ** 2)
    return MomentSummary(mean, sd, skew, kurt)


def segment_feature_rows(chain: PolygonalChain, gamma, zero_state: str = "+",
                         scale: float = 1.0) -> list[dict]:
    """One row per segment with roughness and transition features.

    ``scale`` multiplies distances, e.g. to report them in input units.
    Landmark indices in the rows are 1-based.
    """
    L = np.flatnonzero(gamma)
    K = len(L)
    rows = []
    for k, d in enumerate(piecewise_distances(chain, gamma)):
        d = d * scale
        row = {"segment": k + 1, "start_landmark": int(L[k]) + 1,
               "end_landmark": int(L[(k + 1) % K]) + 1, "n_k": len(d)}
        row.update(asdict(roughness_measures(d)))
        row.update(asdict(transition_probabilities(sign_states(d, zero_state))))
        rows.append(row)
    return rows


def chain_feature_row(chain: PolygonalChain, segment_rows: list[dict],
                      tbr_windows=DEFAULT_TBR_WINDOWS, raw_chain: PolygonalChain | None = None,
                      radial_chain: PolygonalChain | None = None) -> dict:
    """Per-chain summary: K, area, ZCC, TBR per window, and moments of every segment feature.

    Area is taken from ``raw_chain`` (input units) when given.
    """
    rc = radial_chain if radial_chain is not None else chain
    r = radial_distances(rc)
    row = {"n_vertices": len(chain), "K": len(segment_rows),
           "area": shoelace_area(raw_chain if raw_chain is not None else chain),
           "zcc": zero_crossing_count(r)}
    for L in tbr_windows:
        row[f"tbr_L{L}"] = tumor_boundary_roughness(r, L) if L <= len(r) else math.nan
    for name in ROUGHNESS_FIELDS + TRANSITION_FIELDS:
        mom = summarize_moments([s[name] for s in segment_rows])
        for part in MOMENT_FIELDS:
            row[f"{name}_{part}"] = getattr(mom, part)
    return row


def chain_feature_columns(tbr_windows=DEFAULT_TBR_WINDOWS) -> list[str]:
    cols = ["n_vertices", "K", "area", "zcc"] + [f"tbr_L{L}" for L in tbr_windows]
    cols += [f"{n}_{p}" for n in ROUGHNESS_FIELDS + TRANSITION_FIELDS for p in MOMENT_FIELDS]
    return cols


SEGMENT_COLUMNS = ["segment", "start_landmark", "end_landmark", "n_k",
                   *ROUGHNESS_FIELDS, *TRANSITION_FIELDS]
