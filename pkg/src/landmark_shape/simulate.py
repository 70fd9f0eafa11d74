"""Synthetic landmark chains and the detection benchmark."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .geometry import PolygonalChain, is_self_intersecting, normalize, chain_length
from .metrics import ari, convex_hull_baseline, mcc, segment_labels, windowed_match
from .model import Hyperparameters
from .sampler import SamplerConfig, run_multi_chain
from .summaries import compute_ppm, dahl_estimate, map_estimate

EDGE_RANGE = (50.0, 100.0)
PAPER_K = (4, 5, 6)
PAPER_N = (140, 150, 160, 170, 180)
PAPER_SIGMA2 = (0.5, 2.0, 4.0)

BENCHMARK_COLUMNS = ["K", "n", "sigma2", "equilateral", "replicate", "method",
                     "mcc", "ari", "tp", "fp", "fn", "runtime_seconds"]


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimScenario:
    k_true: int
    n: int
    sigma2: float
    equilateral: bool = False
    replicates: int = 1
    seed: int = 0

    def _key(self, replicate: int) -> tuple:
        return (self.k_true, self.n, int(round(self.sigma2 * 1e6)), int(self.equilateral), replicate)

    def rng(self, replicate: int) -> np.random.Generator:
        """Data-generation stream of one replicate."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self._key(replicate)))

    def sampler_seed(self, replicate: int) -> int:
        ss = np.random.SeedSequence(self.seed, spawn_key=self._key(replicate) + (1,))
        return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    chain: PolygonalChain
    gamma_true: np.ndarray
    scenario: SimScenario | None
    scale: float
    rotation: int


def generate_polygon(k: int, equilateral: bool, rng: np.random.Generator,
                     max_tries: int = 10000) -> np.ndarray:
    """Random simple k-gon with every edge length in [50, 100].

    The first k - 2 edges get random directions; the last two close the
    polygon exactly by intersecting two circles.
    """
    if k < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    lo, hi = EDGE_RANGE
    for _ in range(max_tries):
        if equilateral:
            lengths = np.full(k, rng.uniform(lo, hi))
        else:
            lengths = rng.uniform(lo, hi, size=k)
        angles = rng.uniform(0.0, 2.0 * math.pi, size=k - 2)
        steps = lengths[:k - 2, None] * np.column_stack([np.cos(angles), np.sin(angles)])
        pts = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])
        cur = pts[-1]
        gap = pts[0] - cur
        G = float(np.hypot(*gap))
        l1, l2 = lengths[k - 2], lengths[k - 1]
        if G == 0 or not abs(l1 - l2) <= G <= l1 + l2:
            continue
        a = (l1 * l1 - l2 * l2 + G * G) / (2.0 * G)
        h = math.sqrt(max(l1 * l1 - a * a, 0.0))
        if h == 0.0:
            continue
        side = 1.0 if rng.random() < 0.5 else -1.0
        perp = np.array([-gap[1], gap[0]]) / G
        apex = cur + a * gap / G + side * h * perp
        poly = np.vstack([pts, apex])
        if not is_self_intersecting(poly):
            return poly
    raise GenerationError(f"no simple {k}-gon after {max_tries} tries")


def _allocate(lengths: np.ndarray, total: int, minimum: int = 2) -> np.ndarray:
    """Largest-remainder split of ``total`` intervals proportional to edge length."""
    share = total * lengths / lengths.sum()
    counts = np.maximum(np.floor(share).astype(int), minimum)
    while counts.sum() < total:
        counts[int(np.argmax(share - counts))] += 1
    while counts.sum() > total:
        over = np.where(counts > minimum, counts - share, -np.inf)
        counts[int(np.argmax(over))] -= 1
    return counts


def bin_and_perturb(polygon, n: int, sigma2: float, rng: np.random.Generator,
                    scenario: SimScenario | None = None, max_tries: int = 1000) -> SimulatedDataset:
    """Closed chain with ``n - 1`` distinct vertices around a landmark polygon.

    Each edge is split into intervals of (nearly) equal global width; every
    interior interval point is pushed off its edge by N(0, sigma2) along the
    edge normal.  The result is normalized and its start vertex rotated at
    random.
    """
    poly = np.asarray(polygon, dtype=float)
    k = len(poly)
    m = n - 1
    if m < 2 * k:
        raise ValueError(f"n = {n} is too small for {k} landmarks")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    nxt = np.roll(poly, -1, axis=0)
    lengths = np.hypot(*(nxt - poly).T)
    counts = _allocate(lengths, m)
    sd = math.sqrt(sigma2)

    for _ in range(max_tries):
        verts, is_lm = [], []
        for e in range(k):
            a, b = poly[e], nxt[e]
            direction = (b - a) / lengths[e]
            normal = np.array([-direction[1], direction[0]])
            t = np.arange(counts[e]) / counts[e]
            offsets = np.concatenate([[0.0], rng.normal(0.0, sd, counts[e] - 1)]) if sd else np.zeros(counts[e])
            verts.append(a + t[:, None] * (b - a) + offsets[:, None] * normal)
            is_lm.append(np.arange(counts[e]) == 0)
        xy = np.vstack(verts)
        if not is_self_intersecting(xy):
            break
    else:
        raise GenerationError(f"noisy chain still self-intersecting after {max_tries} draws")

    gamma = np.concatenate(is_lm).astype(np.int8)
    r = int(rng.integers(m))
    raw = PolygonalChain(np.roll(xy, -r, axis=0))
    return SimulatedDataset(normalize(raw), np.roll(gamma, -r), scenario,
                            chain_length(raw), r)


def simulate(scenario: SimScenario, replicate: int, polygon_tries: int = 100) -> SimulatedDataset:
    """One replicate; a polygon whose noisy chains keep crossing (sharp corners) is redrawn."""
    rng = scenario.rng(replicate)
    for _ in range(polygon_tries):
        poly = generate_polygon(scenario.k_true, scenario.equilateral, rng)
        try:
            return bin_and_perturb(poly, scenario.n, scenario.sigma2, rng, scenario, max_tries=200)
        except GenerationError:
            continue
    raise GenerationError(f"no simple noisy chain after {polygon_tries} polygons")


def paper_scenarios(replicates: int = 50, seed: int = 0, equilateral: bool = False) -> list[SimScenario]:
    return [SimScenario(k, n, s2, equilateral, replicates, seed)
            for k in PAPER_K for n in PAPER_N for s2 in PAPER_SIGMA2]


def _score(gamma_true, gamma_hat) -> dict:
    w = windowed_match(gamma_true, gamma_hat)
    return {"mcc": mcc(gamma_true, gamma_hat),
            "ari": ari(segment_labels(gamma_true), segment_labels(gamma_hat)),
            "tp": w.tp, "fp": w.fp, "fn": w.fn}


def run_benchmark(scenarios: Iterable[SimScenario], sampler_options: dict | None = None,
                  iterations_factor: int = 100, record_runtime: bool = True,
                  workers: int = 1) -> list[dict]:
    """Score MAP, PPM (Dahl) and convex-hull estimates on simulated replicates.

    ``sampler_options`` are passed to :class:`SamplerConfig`; iterations
    default to ``iterations_factor * n``.  Each replicate gets its own
    data and sampler seeds derived from the scenario seed.
    """
    opts = dict(sampler_options or {})
    rows = []
    for sc in scenarios:
        for rep in range(sc.replicates):
            data = simulate(sc, rep)
            m = len(data.chain)
            hyper = Hyperparameters.default(m)
            seed = sc.sampler_seed(rep)
            cfg = SamplerConfig(**{"iterations": iterations_factor * (m + 1), **opts, "seed": seed})
            t0 = time.perf_counter()
            traces = run_multi_chain(data.chain, hyper, cfg, workers=workers)
            g_map = map_estimate(traces)
            g_ppm = dahl_estimate(compute_ppm(traces), traces)
            t_model = time.perf_counter() - t0
            t0 = time.perf_counter()
            g_hull = convex_hull_baseline(data.chain)
            t_hull = time.perf_counter() - t0
            base = {"K": sc.k_true, "n": sc.n, "sigma2": sc.sigma2,
                    "equilateral": sc.equilateral, "replicate": rep}
            for method, g, dt in (("map", g_map, t_model), ("ppm", g_ppm, t_model),
                                  ("hull", g_hull, t_hull)):
                row = {**base, "method": method, **_score(data.gamma_true, g),
                       "runtime_seconds": dt if record_runtime else None}
                rows.append(row)
    return rows


def summarize_benchmark(rows: list[dict]) -> list[dict]:
    """Median MCC and ARI per scenario and method."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["K"], r["n"], r["sigma2"], r["equilateral"], r["method"]), []).append(r)
    out = []
    for (K, n, s2, eq, method), rs in groups.items():
        out.append({"K": K, "n": n, "sigma2": s2, "equilateral": eq, "method": method,
                    "replicates": len(rs),
                    "median_mcc": statistics.median(r["mcc"] for r in rs),
                    "median_ari": statistics.median(r["ari"] for r in rs)})
    return out
