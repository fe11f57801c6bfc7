"""Couplings used to compare the Wright-Fisher chain with simpler processes.

* total variation distances and the maximal coupling of two laws on ``{0..M}``;
* the ordered triple of binomial processes driven by shared uniforms;
* the Wright-Fisher / Poisson branching pair that stays glued until the first
  mismatch, and an empirical estimate of the mismatch constant ``C0``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from .branching import offspring_sum, poisson_cdf_table
from .chains import ChainKernel, RngStream, _Uniforms
from .errors import BelowN0, InvalidPopulation
from .game import DominanceCertificate, GameSpec, certify_dominance, success_prob

POISSON_TAIL = 1e-15


@dataclass(frozen=True)
class FiniteDistribution:
    """Probability vector on ``{0, ..., len(probs) - 1}``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be a non-negative vector summing to 1")
        object.__setattr__(self, "probs", p)

    @property
    def support_max(self) -> int:
        return len(self.probs) - 1

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(length)
        out[: len(self.probs)] = self.probs
        return out

    @classmethod
    def binomial(cls, n: int, p: float) -> "FiniteDistribution":
        pmf = stats.binom.pmf(np.arange(n + 1), n, p)
        return cls(pmf / pmf.sum())

    @classmethod
    def poisson(cls, mean: float, tail: float = POISSON_TAIL, min_len: int = 0) -> "FiniteDistribution":
        """Poisson law truncated where the upper tail drops below ``tail``.

        The truncated tail mass is folded into the top state.
        """
        if mean == 0:
            pmf = np.zeros(max(min_len, 1))
            pmf[0] = 1.0
            return cls(pmf)
        top = max(int(stats.poisson.isf(tail, mean)) + 1, min_len - 1)
        pmf = stats.poisson.pmf(np.arange(top + 1), mean)
        pmf[-1] += stats.poisson.sf(top, mean)
        return cls(pmf / pmf.sum())


def tv_distance(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """``(1/2) sum_n |p_n - q_n|`` over the union of the supports."""
    n = max(len(p.probs), len(q.probs))
    return 0.5 * float(np.abs(p.padded(n) - q.padded(n)).sum())


def _invert(weights, u):
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(weights) - 1)


def maximal_coupling_sample(p: FiniteDistribution, q: FiniteDistribution, rng,
                            size: Optional[int] = None):
    """Draw ``(x, y)`` with ``x ~ p``, ``y ~ q`` and ``P(x != y) = TV(p, q)``.

    With probability ``1 - TV`` both coordinates come from the normalised
    overlap ``min(p, q)``; otherwise ``x`` comes from ``(p - q)+`` and ``y``
    independently from ``(q - p)+``. Three uniforms are consumed per draw
    regardless of branch. ``rng`` may be an :class:`RngStream` or a numpy
    ``Generator``.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = max(len(p.probs), len(q.probs))
    pp, qq = p.padded(n), q.padded(n)
    overlap = np.minimum(pp, qq)
    delta = max(0.0, 1.0 - overlap.sum())
    count = 1 if size is None else size
    u = gen.random((count, 3))
    x = np.empty(count, dtype=np.int64)
    y = np.empty(count, dtype=np.int64)
    same = u[:, 0] >= delta if delta > 0 else np.ones(count, dtype=bool)
    if same.any():
        x[same] = y[same] = _invert(overlap, u[same, 1])
    diff = ~same
    if diff.any():
        x[diff] = _invert(np.clip(pp - qq, 0.0, None), u[diff, 1])
        y[diff] = _invert(np.clip(qq - pp, 0.0, None), u[diff, 2])
    if size is None:
        return int(x[0]), int(y[0])
    return x, y


def lower_threshold(cert: DominanceCertificate, N: int, j):
    """Success probability of the constant-selection chain with B/A ratio ``gamma``."""
    j = np.asarray(j, dtype=float)
    s = j / cert.gamma
    return s / (s + (N - j))


def upper_threshold(cert: DominanceCertificate, N: int, j):
    """Success probability of the constant-selection chain with B/A ratio ``alpha``."""
    j = np.asarray(j, dtype=float)
    s = j / cert.alpha
    return s / (s + (N - j))


class TripleState(NamedTuple):
    x1: int
    x2: int
    x3: int


def monotone_triple_paths(spec: GameSpec, N: int, i: int, steps: int, paths: int,
                          rng: RngStream, cert: Optional[DominanceCertificate] = None) -> np.ndarray:
    """Simulate ``paths`` copies of the ordered triple for ``steps`` generations.

    Each generation draws ``N`` shared uniforms per path; coordinate ``k`` counts
    how many fall at or below its own success threshold. Returns an integer
    array of shape ``(paths, steps + 1, 3)``.
    """
    cert = cert or certify_dominance(spec)
    if N < cert.N0:
        raise BelowN0(N, cert.N0)
    if not 0 < i < N:
        raise InvalidPopulation(f"initial state {i} must be interior")
    gen = rng.generator()
    out = np.empty((paths, steps + 1, 3), dtype=np.int32)
    state = np.full((paths, 3), i, dtype=np.int64)
    out[:, 0] = state
    for t in range(steps):
        probs = np.stack([
            lower_threshold(cert, N, state[:, 0]),
            success_prob(spec, N, state[:, 1]),
            upper_threshold(cert, N, state[:, 2]),
        ], axis=1)
        u = gen.random((paths, N))
        state = (u[:, :, None] <= probs[:, None, :]).sum(axis=1)
        out[:, t + 1] = state
    return out


def monotone_triple_simulate(spec: GameSpec, N: int, i: int, steps: int, rng: RngStream) -> list:
    path = monotone_triple_paths(spec, N, i, steps, 1, rng)[0]
    return [TripleState(*map(int, row)) for row in path]


def mismatch_probability(spec: GameSpec, N: int, i: int, lam: Optional[float] = None) -> float:
    """Exact ``P(X' != Z')`` under the maximal coupling of BIN(N, xi_N(i)) and Poisson(lam i)."""
    lam = certify_dominance(spec).lam if lam is None else lam
    binom = FiniteDistribution.binomial(N, float(success_prob(spec, N, i)))
    pois = FiniteDistribution.poisson(lam * i)
    return tv_distance(binom, pois)


class CoupledRun(NamedTuple):
    """Paired Wright-Fisher (``x``) and branching (``z``) paths.

    ``tau`` is the first step where they differ, or None if they never did
    within the run.
    """

    x: np.ndarray
    z: np.ndarray
    tau: Optional[int]


def coupled_wf_bp_simulate(spec: GameSpec, N: int, k: int, max_steps: int, rng: RngStream,
                           cert: Optional[DominanceCertificate] = None) -> CoupledRun:
    """Run the glued pair until both are settled or ``max_steps`` is reached.

    While the two agree, each step draws from the maximal coupling of the
    Wright-Fisher binomial row and Poisson(``lam * i``). After the first
    disagreement they move independently. The run ends early once ``x`` is
    absorbed and ``z`` is either extinct or at least ``N``.
    """
    if not N > k >= 1:
        raise InvalidPopulation(f"need N > k >= 1, got N={N}, k={k}")
    cert = cert or certify_dominance(spec)
    lam = cert.lam
    gen = rng.generator()
    kernel = ChainKernel.wright_fisher(spec, N)
    table = poisson_cdf_table(lam)
    xs, zs = [k], [k]
    x = z = k
    tau = None
    uniforms = None
    for t in range(1, max_steps + 1):
        if tau is None:
            binom = FiniteDistribution(kernel.row(x))
            x, z = maximal_coupling_sample(binom, FiniteDistribution.poisson(lam * z), gen)
            if x != z:
                tau = t
        else:
            if uniforms is None:
                uniforms = _Uniforms(gen)
            x = kernel.step(x, uniforms.next())
            z = offspring_sum(lam, z, gen, table)
        xs.append(x)
        zs.append(z)
        if x in (0, N) and (z == 0 or z >= N):
            break
    return CoupledRun(np.array(xs), np.array(zs), tau)


class C0Estimate(NamedTuple):
    """Empirical value of ``max_i N P(mismatch | i) / i^{3/2}`` over ``i = 1..J``.

    This is a Monte Carlo lower estimate of any valid constant, not a proof
    of one; ``rates[i - 1]`` holds the observed mismatch frequency at ``i``.
    """

    value: float
    argmax: int
    rates: np.ndarray
    replicas: int
    rigorous: bool = False


def estimate_C0(spec: GameSpec, N: int, J: int, replicas: int, rng: RngStream) -> C0Estimate:
    if not 1 <= J <= N:
        raise InvalidPopulation(f"J={J} must satisfy 1 <= J <= N")
    cert = certify_dominance(spec)
    gen = rng.generator()
    rates = np.empty(J)
    for i in range(1, J + 1):
        binom = FiniteDistribution.binomial(N, float(success_prob(spec, N, i)))
        pois = FiniteDistribution.poisson(cert.lam * i)
        x, y = maximal_coupling_sample(binom, pois, gen, size=replicas)
        rates[i - 1] = np.count_nonzero(x != y) / replicas
    scaled = N * rates / np.arange(1, J + 1) ** 1.5
    j = int(np.argmax(scaled))
    return C0Estimate(value=float(scaled[j]), argmax=j + 1, rates=rates, replicas=replicas)


def write_triple_csv(fh, path):
    writer = csv.writer(fh)
    writer.writerow(["step", "x1", "x2", "x3"])
    for t, row in enumerate(path):
        writer.writerow([t, *map(int, row)])


def write_mismatch_csv(fh, N, rates, C0):
    """Rows ``i,rate,bound`` with ``bound = C0 i^{3/2} / N``."""
    writer = csv.writer(fh)
    writer.writerow(["i", "rate", "bound"])
    for i, rate in enumerate(rates, start=1):
        writer.writerow([i, f"{rate:.12g}", f"{C0 * i**1.5 / N:.12g}"])
