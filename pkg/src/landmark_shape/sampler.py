"""Metropolis search over landmark indicators.

Moves: add-delete every iteration; swap and partial shift additionally every
``special_move_period`` iterations.  All three proposals are symmetric, so
acceptance is ``min(1, exp(delta log posterior))``.

Randomness comes from :class:`random.Random` (Mersenne Twister).  Chain ``c``
of a multi-chain run is seeded with ``(seed + c) mod 2**64``.
"""

from __future__ import annotations

import bisect
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    PolygonalChain,
    adjacent_overlap,
    is_self_intersecting,
    segments_intersect,
)
from .model import Hyperparameters, log_prior_k, segment_log_marglik_ss

SEED_MASK = (1 << 64) - 1
MOVES = ("add", "delete", "swap", "shift")


class InitializationError(RuntimeError):
    pass


class CacheIncoherence(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int
    burnin_fraction: float = 0.5
    special_move_period: int = 20
    shift_magnitude: int = 1
    seed: int = 0
    n_chains: int = 4
    debug: bool = False
    check_every: int = 1000

    def __post_init__(self):
        if self.iterations < 2:
            raise ValueError("iterations must be at least 2")
        if not 0 < self.burnin_fraction < 1:
            raise ValueError("burnin_fraction must lie in (0, 1)")
        if self.burnin_fraction * self.iterations < 1:
            raise ValueError("burn-in must cover at least one iteration")
        if self.special_move_period < 1 or self.shift_magnitude < 1 or self.n_chains < 1:
            raise ValueError("special_move_period, shift_magnitude and n_chains must be positive")
        if not 0 <= self.seed <= SEED_MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def default(cls, m: int, **overrides) -> "SamplerConfig":
        """Defaults for a chain with ``m`` distinct vertices (``100 n`` iterations)."""
        overrides.setdefault("iterations", 100 * (m + 1))
        return cls(**overrides)

    @property
    def n_kept(self) -> int:
        return math.ceil(self.iterations * (1.0 - self.burnin_fraction))


class LandmarkPosterior:
    """Posterior evaluator bound to one chain, with per-segment memoization.

    A segment's log marginal likelihood depends on the distances only
    through their sum of squares, so it is a function of its two bounding
    landmarks alone and is cached by that pair.
    """

    def __init__(self, chain: PolygonalChain, hyper: Hyperparameters, max_cache: int = 2_000_000):
        self.chain = chain
        self.hyper = hyper
        self.m = m = len(chain)
        xy = chain.vertices
        self._xy2 = np.concatenate([xy, xy])
        self._pts = [tuple(p) for p in xy.tolist()]
        self._prior = [log_prior_k(K, m, hyper) for K in range(m + 1)]
        self._cache: dict[int, float] = {}
        self._max_cache = max_cache

    def log_prior(self, K: int) -> float:
        return self._prior[K]

    def segment_term(self, a: int, b: int) -> float:
        key = a * self.m + b
        val = self._cache.get(key)
        if val is None:
            if len(self._cache) >= self._max_cache:
                self._cache.clear()
            val = self._compute_term(a, b)
            self._cache[key] = val
        return val

    def _compute_term(self, a: int, b: int) -> float:
        m = self.m
        span = (b - a) % m or m
        xa, ya = self._pts[a]
        xb, yb = self._pts[b]
        A, B = yb - ya, xb - xa
        C = xb * ya - yb * xa
        seg = self._xy2[a + 1:a + span]
        r = A * seg[:, 0] - B * seg[:, 1] + C
        ss = float(np.dot(r, r)) / (A * A + B * B)
        return segment_log_marglik_ss(span - 1, ss, self.hyper)

    def terms(self, landmarks) -> dict[int, float]:
        L = list(landmarks)
        K = len(L)
        return {L[k]: self.segment_term(L[k], L[(k + 1) % K]) for k in range(K)}

    def structurally_valid(self, landmarks) -> bool:
        L = landmarks
        K = len(L)
        if K < 3:
            return False
        m = self.m
        for k in range(K):
            if (L[(k + 1) % K] - L[k]) % m < 2:
                return False
        return not is_self_intersecting(self.chain.vertices[list(L)])

    def evaluate(self, landmarks) -> float:
        """Log posterior of a sorted landmark list; ``-inf`` when invalid."""
        if not self.structurally_valid(landmarks):
            return -math.inf
        t = self.terms(landmarks)
        return self._prior[len(landmarks)] + math.fsum(t[a] for a in landmarks)

    # local simplicity checks; the current landmark polygon is assumed simple

    def _conflict(self, p: int, q: int, u: int, v: int) -> bool:
        P = self._pts
        if p == u:
            return adjacent_overlap(P[q], P[p], P[v])
        if p == v:
            return adjacent_overlap(P[q], P[p], P[u])
        if q == u:
            return adjacent_overlap(P[p], P[q], P[v])
        if q == v:
            return adjacent_overlap(P[p], P[q], P[u])
        return segments_intersect(P[p], P[q], P[u], P[v])

    def insertion_ok(self, L: list[int], pos: int, i: int) -> bool:
        K = len(L)
        a, b = L[pos - 1], L[pos % K]
        if adjacent_overlap(self._pts[a], self._pts[i], self._pts[b]):
            return False
        for j in range(K):
            u, v = L[j], L[(j + 1) % K]
            if u == a and v == b:
                continue
            if self._conflict(a, i, u, v) or self._conflict(i, b, u, v):
                return False
        return True

    def removal_ok(self, L: list[int], pos: int) -> bool:
        K = len(L)
        i = L[pos]
        a, b = L[pos - 1], L[(pos + 1) % K]
        for j in range(K):
            u, v = L[j], L[(j + 1) % K]
            if u == i or v == i:
                continue
            if self._conflict(a, b, u, v):
                return False
        return True


@dataclass
class ChainState:
    gamma: np.ndarray
    landmarks: list[int]
    terms: dict[int, float]
    log_post: float

    @classmethod
    def from_landmarks(cls, posterior: LandmarkPosterior, landmarks) -> "ChainState":
        L = sorted(int(i) for i in landmarks)
        lp = posterior.evaluate(L)
        if lp == -math.inf:
            raise ValueError("initial landmark configuration is invalid")
        g = np.zeros(posterior.m, dtype=np.int8)
        g[L] = 1
        return cls(g, L, posterior.terms(L), lp)

    @property
    def K(self) -> int:
        return len(self.landmarks)


@dataclass(frozen=True)
class Proposal:
    kind: str
    landmarks: tuple[int, ...]
    index: int = -1
    log_ratio: float = 0.0

    def gamma(self, m: int) -> np.ndarray:
        g = np.zeros(m, dtype=np.int8)
        g[list(self.landmarks)] = 1
        return g


def propose_add_delete(state: ChainState, rng: random.Random) -> Proposal:
    m = len(state.gamma)
    i = rng.randrange(m)
    L = state.landmarks
    if state.gamma[i]:
        pos = bisect.bisect_left(L, i)
        return Proposal("delete", tuple(L[:pos] + L[pos + 1:]), i)
    pos = bisect.bisect_left(L, i)
    return Proposal("add", tuple(L[:pos] + [i] + L[pos:]), i)


def propose_swap(state: ChainState, rng: random.Random) -> Proposal:
    m = len(state.gamma)
    K = state.K
    out = state.landmarks[rng.randrange(K)]
    j = rng.randrange(m - K)
    # j-th non-landmark index
    for lm in state.landmarks:
        if lm <= j:
            j += 1
        else:
            break
    new = sorted([lm for lm in state.landmarks if lm != out] + [j])
    return Proposal("swap", tuple(new), j)


def propose_partial_shift(state: ChainState, rng: random.Random, magnitude: int = 1) -> Proposal:
    m = len(state.gamma)
    s = rng.randint(1, magnitude)
    if rng.random() < 0.5:
        s = -s
    return Proposal("shift", tuple(sorted((lm - s) % m for lm in state.landmarks)), s)


def proposal_delta(state: ChainState, proposal: Proposal, posterior: LandmarkPosterior):
    """Change in log posterior, evaluated on the affected segments only.

    Returns ``(delta, new_terms_or_None)``; ``delta`` is ``-inf`` for
    zero-prior proposals.
    """
    L = state.landmarks
    K = len(L)
    m = posterior.m
    g = state.gamma
    if proposal.kind == "add":
        i = proposal.index
        if g[i - 1] or g[(i + 1) % m]:
            return -math.inf, None
        pos = bisect.bisect_left(L, i)
        a, b = L[pos - 1], L[pos % K]
        if not posterior.insertion_ok(L, pos, i):
            return -math.inf, None
        t_ai = posterior.segment_term(a, i)
        t_ib = posterior.segment_term(i, b)
        delta = (t_ai + t_ib - state.terms[a]
                 + posterior.log_prior(K + 1) - posterior.log_prior(K))
        return delta, {a: t_ai, i: t_ib}
    if proposal.kind == "delete":
        if K <= 3:
            return -math.inf, None
        i = proposal.index
        pos = bisect.bisect_left(L, i)
        a = L[pos - 1]
        if not posterior.removal_ok(L, pos):
            return -math.inf, None
        t_ab = posterior.segment_term(a, L[(pos + 1) % K])
        delta = (t_ab - state.terms[a] - state.terms[i]
                 + posterior.log_prior(K - 1) - posterior.log_prior(K))
        return delta, {a: t_ab}
    new = proposal.landmarks
    lp = posterior.evaluate(new)
    if lp == -math.inf:
        return -math.inf, None
    return lp - state.log_post, None


def accept_reject(state: ChainState, proposal: Proposal, posterior: LandmarkPosterior,
                  rng: random.Random) -> tuple[ChainState, bool]:
    """Metropolis step; updates ``state`` in place on acceptance."""
    delta, new_terms = proposal_delta(state, proposal, posterior)
    log_m = delta + proposal.log_ratio
    if log_m == -math.inf:
        return state, False
    if log_m < 0 and rng.random() >= math.exp(log_m):
        return state, False

    L = list(proposal.landmarks)
    if proposal.kind == "add":
        state.gamma[proposal.index] = 1
        state.terms.update(new_terms)
    elif proposal.kind == "delete":
        state.gamma[proposal.index] = 0
        del state.terms[proposal.index]
        state.terms.update(new_terms)
    else:
        state.gamma[:] = 0
        state.gamma[L] = 1
        state.terms = posterior.terms(L)
    state.landmarks = L
    state.log_post = posterior.log_prior(len(L)) + math.fsum(state.terms[a] for a in L)
    return state, True


@dataclass
class McmcTrace:
    m: int
    landmark_sets: list[tuple[int, ...]]
    log_post: np.ndarray
    proposed: dict[str, int] = field(default_factory=dict)
    accepted: dict[str, int] = field(default_factory=dict)
    seed: int | None = None

    def __len__(self):
        return len(self.landmark_sets)

    @property
    def samples(self) -> np.ndarray:
        """Dense ``(B, m)`` indicator matrix."""
        out = np.zeros((len(self.landmark_sets), self.m), dtype=np.int8)
        for b, L in enumerate(self.landmark_sets):
            out[b, list(L)] = 1
        return out

    def acceptance_rates(self) -> dict[str, float]:
        return {k: (self.accepted.get(k, 0) / n if n else 0.0)
                for k, n in self.proposed.items()}


def initial_state(posterior: LandmarkPosterior, k_hat: float, rng: random.Random,
                  attempts: int = 1000) -> ChainState:
    m = posterior.m
    k0 = max(3, int(round(k_hat)))
    for _ in range(attempts):
        L = sorted(rng.sample(range(m), k0))
        if posterior.evaluate(L) > -math.inf:
            return ChainState.from_landmarks(posterior, L)
    raise InitializationError(f"no valid initial configuration after {attempts} attempts")


def run_chain(chain: PolygonalChain, hyper: Hyperparameters, config: SamplerConfig,
              rng: random.Random | None = None,
              posterior: LandmarkPosterior | None = None) -> McmcTrace:
    if rng is None:
        rng = random.Random(config.seed)
    if posterior is None:
        posterior = LandmarkPosterior(chain, hyper)
    state = initial_state(posterior, hyper.k_hat, rng)

    proposed = dict.fromkeys(MOVES, 0)
    accepted = dict.fromkeys(MOVES, 0)
    T = config.iterations
    keep_from = T - config.n_kept
    period = config.special_move_period
    sets: list[tuple[int, ...]] = []
    trace_lp: list[float] = []
    current = tuple(state.landmarks)

    def step(proposal):
        nonlocal state, current
        proposed[proposal.kind] += 1
        state, ok = accept_reject(state, proposal, posterior, rng)
        if ok:
            accepted[proposal.kind] += 1
            current = tuple(state.landmarks)

    for t in range(1, T + 1):
        step(propose_add_delete(state, rng))
        if t % period == 0:
            step(propose_swap(state, rng))
            step(propose_partial_shift(state, rng, config.shift_magnitude))
        if config.debug and t % config.check_every == 0:
            fresh = posterior.evaluate(state.landmarks)
            if abs(fresh - state.log_post) > 1e-9:
                raise CacheIncoherence(f"iteration {t}: cached {state.log_post} != {fresh}")
        if t > keep_from:
            sets.append(current)
            trace_lp.append(state.log_post)

    return McmcTrace(len(chain), sets, np.array(trace_lp), proposed, accepted, config.seed)


def chain_seed(seed: int, index: int) -> int:
    return (seed + index) & SEED_MASK


def _run_one(args):
    chain, hyper, config, c = args
    return run_chain(chain, hyper, config, random.Random(chain_seed(config.seed, c)))


def run_multi_chain(chain: PolygonalChain, hyper: Hyperparameters, config: SamplerConfig,
                    workers: int = 1) -> list[McmcTrace]:
    """Independent chains; chain ``c`` uses seed ``config.seed + c``."""
    jobs = [(chain, hyper, config, c) for c in range(config.n_chains)]
    if workers > 1 and config.n_chains > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run_one, jobs))
    else:
        posterior = LandmarkPosterior(chain, hyper)
        traces = [run_chain(chain, hyper, config, random.Random(chain_seed(config.seed, c)),
                            posterior) for (_, _, _, c) in jobs]
    for c, tr in enumerate(traces):
        tr.seed = chain_seed(config.seed, c)
    return traces
