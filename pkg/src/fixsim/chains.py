"""Transition kernels on ``{0, ..., N}`` and the seeded simulation engine.

Three kernels are provided: the frequency-dependent Wright-Fisher chain
(binomial rows), the birth-death Moran chain, and the Moran jump chain with
the lazy mass removed. Every random draw goes through CDF inversion of a
single uniform so that a given ``(seed, stream)`` pair fixes the trajectory
bit for bit.
"""
from __future__ import annotations

import csv
import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .game import GameSpec, fitness, success_prob
from .errors import InvalidPopulation


class KernelKind(str, enum.Enum):
    WRIGHT_FISHER = "wright_fisher"
    MORAN = "moran"
    EMBEDDED_MORAN = "embedded_moran"


DEFAULT_MAX_STEPS = {
    KernelKind.WRIGHT_FISHER: 10**7,
    KernelKind.MORAN: 10**9,
    KernelKind.EMBEDDED_MORAN: 10**9,
}


@dataclass(frozen=True)
class ChainKernel:
    kind: KernelKind
    spec: GameSpec
    N: int
    _cdf_cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvalidPopulation(f"population size must be an integer >= 2, got {self.N!r}")
        object.__setattr__(self, "kind", KernelKind(self.kind))

    @classmethod
    def wright_fisher(cls, spec, N):
        return cls(KernelKind.WRIGHT_FISHER, spec, N)

    @classmethod
    def moran(cls, spec, N):
        return cls(KernelKind.MORAN, spec, N)

    @classmethod
    def embedded_moran(cls, spec, N):
        return cls(KernelKind.EMBEDDED_MORAN, spec, N)

    def _check_state(self, i):
        if not 0 <= i <= self.N:
            raise InvalidPopulation(f"state {i} outside 0..{self.N}")

    def row(self, i: int) -> np.ndarray:
        self._check_state(i)
        if self.kind is KernelKind.WRIGHT_FISHER:
            return wf_row(self, i)
        if self.kind is KernelKind.MORAN:
            return moran_row(self, i)
        return embedded_moran_row(self, i)

    def matrix(self) -> np.ndarray:
        """Dense ``(N+1) x (N+1)`` transition matrix."""
        if self.kind is KernelKind.WRIGHT_FISHER:
            return np.exp(wf_log_matrix(self.spec, self.N))
        P = np.zeros((self.N + 1, self.N + 1))
        P[0, 0] = P[self.N, self.N] = 1.0
        i = np.arange(1, self.N)
        down, stay, up = _birth_death_probs(self, i)
        P[i, i - 1] = down
        P[i, i] = stay
        P[i, i + 1] = up
        return P

    def cdf(self, i: int) -> np.ndarray:
        cached = self._cdf_cache.get(i)
        if cached is None:
            cached = np.cumsum(self.row(i))
            self._cdf_cache[i] = cached
        return cached

    def step(self, i: int, u: float) -> int:
        """Next state from state ``i`` given a uniform ``u`` in [0, 1), by inversion."""
        if i == 0 or i == self.N:
            return i
        if self.kind is KernelKind.WRIGHT_FISHER:
            j = int(np.searchsorted(self.cdf(i), u, side="right"))
            return min(j, self.N)
        # ascending order i-1, i, i+1 matches inversion over the row CDF
        down, stay, up = _birth_death_probs(self, i)
        if u < down:
            return i - 1
        if u < down + stay:
            return i
        return i + 1


def _log_success_pair(spec: GameSpec, N: int, i):
    """``log xi`` and ``log(1 - xi)`` without forming ``1 - xi`` by subtraction."""
    f, g = fitness(spec, N, i)
    i = np.asarray(i, dtype=float)
    a_mass = i * f
    b_mass = (N - i) * g
    with np.errstate(divide="ignore"):
        log_tot = np.log(a_mass + b_mass)
        return np.log(a_mass) - log_tot, np.log(b_mass) - log_tot


def _log_binom_coef(N):
    j = np.arange(N + 1)
    return gammaln(N + 1) - gammaln(j + 1) - gammaln(N - j + 1)


def _binomial_log_pmf(N, log_p, log_q):
    j = np.arange(N + 1)
    coef = _log_binom_coef(N)
    log_p = np.asarray(log_p)[..., None]
    log_q = np.asarray(log_q)[..., None]
    # 0 * (-inf) must read as 0 for the point-mass rows
    with np.errstate(invalid="ignore"):
        a = np.where(j == 0, 0.0, j * log_p)
        b = np.where(j == N, 0.0, (N - j) * log_q)
    out = coef + a + b
    # the rounding error of gammaln(N + 1) is shared by the whole row; renormalising removes it
    return out - logsumexp(out, axis=-1, keepdims=True)


def wf_log_row(spec: GameSpec, N: int, i: int) -> np.ndarray:
    log_p, log_q = _log_success_pair(spec, N, i)
    return _binomial_log_pmf(N, log_p, log_q)


def wf_log_matrix(spec: GameSpec, N: int) -> np.ndarray:
    log_p, log_q = _log_success_pair(spec, N, np.arange(N + 1))
    return _binomial_log_pmf(N, log_p, log_q)


def wf_row(kernel: ChainKernel, i: int) -> np.ndarray:
    """Binomial ``BIN(N, xi_N(i))`` row, evaluated in log space."""
    return np.exp(wf_log_row(kernel.spec, kernel.N, i))


def _birth_death_probs(kernel: ChainKernel, i):
    """(down, stay, up) for interior ``i`` under the Moran or jump-chain kernel."""
    N = kernel.N
    i_arr = np.asarray(i, dtype=float)
    if kernel.kind is KernelKind.EMBEDDED_MORAN:
        # up/(up+down) reduces exactly to f/(f+g)
        f, g = fitness(kernel.spec, N, i_arr)
        up = f / (f + g)
        down = g / (f + g)
        return down, np.zeros_like(up), up
    xi = success_prob(kernel.spec, N, i_arr)
    up = (N - i_arr) / N * xi
    down = i_arr / N * (1.0 - xi)
    stay = 1.0 - up - down
    return down, stay, up


def _point_mass(N, i):
    row = np.zeros(N + 1)
    row[i] = 1.0
    return row


def moran_row(kernel: ChainKernel, i: int) -> np.ndarray:
    N = kernel.N
    if i == 0 or i == N:
        return _point_mass(N, i)
    down, stay, up = _birth_death_probs(kernel, i)
    row = np.zeros(N + 1)
    row[i - 1], row[i], row[i + 1] = down, stay, up
    return row


def embedded_moran_row(kernel: ChainKernel, i: int) -> np.ndarray:
    return moran_row(kernel, i)


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_index)``.

    Streams are derived with ``numpy.random.SeedSequence`` spawn keys, so
    distinct indices under one seed are independent.
    """

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))


class _Uniforms:
    """Buffered scalar uniforms; consumption order equals one-at-a-time draws."""

    def __init__(self, gen, block=256):
        self._gen = gen
        self._block = block
        self._buf = gen.random(block)
        self._pos = 0

    def next(self):
        if self._pos == self._block:
            self._buf = self._gen.random(self._block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


@dataclass(frozen=True)
class Trajectory:
    """One realised path.

    ``states`` holds every ``thin``-th state starting from the initial one; the
    final state is always appended so ``states[-1]`` is where the run stopped.
    ``absorbed_at`` is ``None`` for runs censored at ``max_steps``.
    """

    initial: int
    states: tuple
    absorbed_at: Optional[int]
    steps: int
    thin: int = 1

    @property
    def censored(self) -> bool:
        return self.absorbed_at is None


def default_thin(N: int) -> int:
    return 1 if N <= 1000 else 10


def _run(kernel, initial, max_steps, gen, thin):
    N = kernel.N
    x = initial
    states = [x] if thin else None
    t = 0
    uniforms = None
    while 0 < x < N and t < max_steps:
        if uniforms is None:
            uniforms = _Uniforms(gen)
        x = kernel.step(x, uniforms.next())
        t += 1
        if thin and t % thin == 0:
            states.append(x)
    absorbed = x if x in (0, N) else None
    if thin and (t % thin != 0):
        states.append(x)
    return x, t, absorbed, states


def simulate(kernel: ChainKernel, initial: int, max_steps: Optional[int] = None,
             rng: Optional[RngStream] = None, thin: Optional[int] = None) -> Trajectory:
    """Run the chain from ``initial`` until absorption or ``max_steps`` steps."""
    kernel._check_state(initial)
    if max_steps is None:
        max_steps = DEFAULT_MAX_STEPS[kernel.kind]
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    rng = rng if rng is not None else RngStream(0)
    thin = thin or default_thin(kernel.N)
    _, t, absorbed, states = _run(kernel, initial, max_steps, rng.generator(), thin)
    return Trajectory(initial=initial, states=tuple(states), absorbed_at=absorbed, steps=t, thin=thin)


class McEstimate(NamedTuple):
    """Bernoulli Monte Carlo estimate with a normal-approximation 95% interval.

    When some replicas were censored, ``point`` is conditioned on the absorbed
    ones and ``conditioned`` is set.
    """

    point: float
    std_error: float
    replicas: int
    ci95: tuple
    successes: int
    censored: int
    conditioned: bool


def bernoulli_estimate(successes, trials, replicas=None, censored=0) -> McEstimate:
    replicas = trials if replicas is None else replicas
    if trials == 0:
        return McEstimate(math.nan, math.nan, replicas, (math.nan, math.nan), successes, censored, True)
    p = successes / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    return McEstimate(p, se, replicas, (p - 1.96 * se, p + 1.96 * se), successes, censored, censored > 0)


def resolve_workers(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("FIXSIM_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _chunks(n, parts):
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def _fixation_chunk(args):
    kernel, initial, seed, lo, hi, max_steps = args
    fixed = absorbed = 0
    for r in range(lo, hi):
        _, _, end, _ = _run(kernel, initial, max_steps, RngStream(seed, r).generator(), 0)
        if end is not None:
            absorbed += 1
            fixed += end == kernel.N
    return fixed, absorbed


def _map_chunks(fn, tasks, workers):
    if workers == 1 or len(tasks) == 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def monte_carlo_fixation(kernel: ChainKernel, initial: int, replicas: int, seed: int,
                         max_steps: Optional[int] = None, workers: Optional[int] = None) -> McEstimate:
    """Fraction of replicas absorbed at ``N``.

    Replica ``r`` always uses stream ``(seed, r)`` and the per-chunk counts are
    summed, so the result does not depend on ``workers``.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    kernel._check_state(initial)
    max_steps = max_steps or DEFAULT_MAX_STEPS[kernel.kind]
    workers = resolve_workers(workers)
    tasks = [(kernel, initial, seed, lo, hi, max_steps) for lo, hi in _chunks(replicas, workers)]
    results = _map_chunks(_fixation_chunk, tasks, workers)
    fixed = sum(r[0] for r in results)
    absorbed = sum(r[1] for r in results)
    return bernoulli_estimate(fixed, absorbed, replicas=replicas, censored=replicas - absorbed)


class TimeCdfPoint(NamedTuple):
    m: int
    p: float
    std_error: float


def _time_chunk(args):
    kernel, initial, seed, lo, hi, horizon = args
    times = np.full(hi - lo, -1, dtype=np.int64)
    for r in range(lo, hi):
        _, t, end, _ = _run(kernel, initial, horizon, RngStream(seed, r).generator(), 0)
        if end is not None:
            times[r - lo] = t
    return times


def absorption_times(kernel: ChainKernel, initial: int, replicas: int, seed: int,
                     horizon: int, workers: Optional[int] = None) -> np.ndarray:
    """Absorption step of each replica, or -1 if it is still transient at ``horizon``."""
    workers = resolve_workers(workers)
    tasks = [(kernel, initial, seed, lo, hi, horizon) for lo, hi in _chunks(replicas, workers)]
    return np.concatenate(_map_chunks(_time_chunk, tasks, workers))


def empirical_time_cdf(kernel: ChainKernel, initial: int, replicas: int, seed: int,
                       horizons: Sequence[int], workers: Optional[int] = None) -> list:
    """Empirical ``P(T <= m)`` at each horizon ``m`` with binomial standard errors."""
    horizons = [int(m) for m in horizons]
    if horizons != sorted(horizons):
        raise ValueError("horizons must be sorted ascending")
    kernel._check_state(initial)
    top = max(horizons[-1], 1) if horizons else 1
    times = absorption_times(kernel, initial, replicas, seed, top, workers)
    out = []
    for m in horizons:
        hits = int(np.count_nonzero((times >= 0) & (times <= m)))
        est = bernoulli_estimate(hits, replicas)
        out.append(TimeCdfPoint(m, est.point, est.std_error))
    return out


class MonotonicityReport(NamedTuple):
    ok: bool
    violation: Optional[tuple]
    pairs_checked: int


def _log_cdf_sf(log_pmf):
    log_cdf = np.logaddexp.accumulate(log_pmf)
    # P(X > k) for k = 0..N
    log_tail = np.logaddexp.accumulate(log_pmf[::-1])[::-1]
    log_sf = np.append(log_tail[1:], -np.inf)
    return log_cdf, log_sf


def _strictly_below(cdf_i, sf_i, cdf_j, sf_j):
    """Elementwise ``CDF_i(k) > CDF_j(k)`` decided in whichever tail is accurate."""
    use_cdf = cdf_i < math.log(0.5)
    return np.where(use_cdf, cdf_i > cdf_j, sf_i < sf_j)


def verify_stochastic_monotonicity(kernel: ChainKernel, exhaustive: bool = False) -> MonotonicityReport:
    """Check ``P(X' <= k | i) > P(X' <= k | j)`` for interior ``i < j`` and ``k < N``.

    Comparisons are made on log-CDFs or log-survival functions so that rows
    whose tails underflow in linear space are still ordered correctly. By
    default only neighbouring states are compared (strict order is transitive);
    ``exhaustive=True`` checks every pair.
    """
    if kernel.kind is not KernelKind.WRIGHT_FISHER:
        raise ValueError("stochastic monotonicity check is defined for Wright-Fisher kernels")
    N = kernel.N
    if N <= 2:
        return MonotonicityReport(True, None, 0)
    rows = {i: _log_cdf_sf(wf_log_row(kernel.spec, N, i)) for i in range(1, N)}
    if exhaustive:
        pairs = ((i, j) for i in range(1, N) for j in range(i + 1, N))
    else:
        pairs = ((i, i + 1) for i in range(1, N - 1))
    count = 0
    for i, j in pairs:
        count += 1
        ok = _strictly_below(*rows[i], *rows[j])[:N]
        if not ok.all():
            k = int(np.argmin(ok))
            return MonotonicityReport(False, (i, j, k), count)
    return MonotonicityReport(True, None, count)


def write_trajectories_csv(fh, trajectories: Sequence[Trajectory], long_format: bool = True):
    """Write paths as ``replica,step,state`` rows (or ``step,state`` for a single path)."""
    writer = csv.writer(fh)
    if long_format:
        writer.writerow(["replica", "step", "state"])
    else:
        writer.writerow(["step", "state"])
    for r, traj in enumerate(trajectories):
        for idx, state in enumerate(traj.states):
            step = min(idx * traj.thin, traj.steps)
            writer.writerow([r, step, state] if long_format else [step, state])
