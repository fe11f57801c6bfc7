"""Two-strategy game, frequency-dependent fitness and the dominance constants.

All state-dependent functions accept ``i`` either as a Python integer or as a
numpy array of counts and are evaluated elementwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DominanceViolated, InvalidPopulation


@dataclass(frozen=True)
class GameSpec:
    """Payoff matrix ``[[a, b], [c, d]]`` (row player A/B) and selection strength ``w``.

    ``a``: A meets A, ``b``: A meets B, ``c``: B meets A, ``d``: B meets B.
    """

    a: float
    b: float
    c: float
    d: float
    w: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            if not getattr(self, name) > 0:
                raise ValueError(f"payoff {name} must be positive, got {getattr(self, name)!r}")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"selection strength w must lie in [0, 1], got {self.w!r}")

    def replace(self, **changes) -> "GameSpec":
        fields = dict(a=self.a, b=self.b, c=self.c, d=self.d, w=self.w)
        fields.update(changes)
        return GameSpec(**fields)

    def base_fitness(self, payoff):
        return 1.0 - self.w + self.w * payoff


class PopulationPoint(NamedTuple):
    N: int
    i: int

    @property
    def interior(self) -> bool:
        return 0 < self.i < self.N

    @property
    def absorbing(self) -> bool:
        return self.i == 0 or self.i == self.N


def _check_N(N):
    if int(N) != N or N < 2:
        raise InvalidPopulation(f"population size must be an integer >= 2, got {N!r}")


def _as_counts(i):
    return np.asarray(i, dtype=float) if not np.isscalar(i) else float(i)


def payoffs(spec: GameSpec, N: int, i):
    """Expected payoffs of A and B against a random other member of the population."""
    _check_N(N)
    i = _as_counts(i)
    pi_a = (spec.a * (i - 1) + spec.b * (N - i)) / (N - 1)
    pi_b = (spec.c * i + spec.d * (N - i - 1)) / (N - 1)
    return pi_a, pi_b


def fitness(spec: GameSpec, N: int, i):
    pi_a, pi_b = payoffs(spec, N, i)
    return spec.base_fitness(pi_a), spec.base_fitness(pi_b)


def fitness_ratio(spec: GameSpec, N: int, i):
    """``g_N(i) / f_N(i)``, the B-to-A fitness ratio."""
    f, g = fitness(spec, N, i)
    return g / f


def success_prob(spec: GameSpec, N: int, i):
    """Probability that one offspring draw is of type A when ``i`` A-players are present.

    Exactly 0 at ``i = 0`` and exactly 1 at ``i = N``.
    """
    f, g = fitness(spec, N, i)
    i = _as_counts(i)
    num = i * f
    return num / (num + (N - i) * g)


def drift(spec: GameSpec, N: int, i):
    """Local drift ``E[X' - X | X = i]`` of the Wright-Fisher chain, in closed form."""
    f, g = fitness(spec, N, i)
    i = _as_counts(i)
    return i * (N - i) * (f - g) / (i * f + (N - i) * g)


def heterozygosity(N: int, i):
    """Probability that two distinct individuals drawn at random differ in type."""
    _check_N(N)
    i = _as_counts(i)
    return 2.0 * i * (N - i) / (N * (N - 1))


def drift_via_heterozygosity(spec: GameSpec, N: int, i: int) -> float:
    """Drift recomputed from the labelled fitness profile of the population.

    The first ``i`` individuals carry fitness ``f``, the remaining ``N - i``
    carry ``g``; the result is half the sum of ``|F(k) - F(j)|`` over all ordered
    pairs divided by the total fitness. This route never touches the closed
    form in :func:`drift`, so the two can be checked against each other.
    The absolute value loses the sign, which is restored from ``f - g``.
    """
    _check_N(N)
    if not 0 < i < N:
        raise InvalidPopulation(f"state {i} is not interior for N={N}")
    f, g = fitness(spec, N, i)
    profile = np.where(np.arange(1, N + 1) <= i, f, g)
    gaps = np.abs(profile[:, None] - profile[None, :]).sum()
    value = 0.5 * gaps / profile.sum()
    return float(value) if f >= g else -float(value)


@dataclass(frozen=True)
class DominanceCertificate:
    """Uniform ratio bounds and the constants derived from them.

    ``alpha <= g_N(i)/f_N(i) <= gamma`` for every ``N >= N0`` and interior ``i``;
    ``rho``, ``theta`` are the bases of the exponential sub/supermartingales and
    ``lam`` the limiting offspring mean ``f/g`` at small ``i``.
    """

    spec: GameSpec
    N0: int
    alpha: float
    gamma: float
    rho: float
    theta: float
    lam: float
    alpha_source: str
    gamma_source: str

    def as_dict(self):
        return {
            "a": self.spec.a, "b": self.spec.b, "c": self.spec.c, "d": self.spec.d, "w": self.spec.w,
            "N0": self.N0, "alpha": self.alpha, "gamma": self.gamma,
            "rho": self.rho, "theta": self.theta, "lambda": self.lam,
            "alpha_source": self.alpha_source, "gamma_source": self.gamma_source,
        }


def offspring_mean(spec: GameSpec) -> float:
    """``(1-w+wb) / (1-w+wd)``: limit of ``f_N(i)/g_N(i)`` for fixed ``i`` as ``N`` grows."""
    return spec.base_fitness(spec.b) / spec.base_fitness(spec.d)


def find_N0(spec: GameSpec, max_N: int = 10**7) -> int:
    """Smallest ``N >= 2`` with ``a(N-1) > cN - d`` and ``b(N-1) > d(N-2) + c``.

    The scan also requires ``f > g`` at ``i = 1`` and ``i = N - 1`` so that the
    returned size is usable even where the two closed-form inequalities are
    looser than the endpoint conditions.
    """
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    for N in range(2, max_N + 1):
        if not (a * (N - 1) > c * N - d and b * (N - 1) > d * (N - 2) + c):
            continue
        if fitness_ratio(spec, N, 1) < 1.0 and fitness_ratio(spec, N, N - 1) < 1.0:
            return N
    raise DominanceViolated(f"no N0 found below {max_N}", failed="N0")


def certify_dominance(spec: GameSpec) -> DominanceCertificate:
    """Check that A strictly dominates B under selection and build the certificate.

    Requires ``w > 0``, ``a > c`` and ``b > d``. Raises :class:`DominanceViolated`
    naming the first inequality that fails.
    """
    if not spec.w > 0:
        raise DominanceViolated("selection strength w must be > 0", failed="w>0")
    if not spec.a > spec.c:
        raise DominanceViolated(f"a > c fails ({spec.a} <= {spec.c})", failed="a>c")
    if not spec.b > spec.d:
        raise DominanceViolated(f"b > d fails ({spec.b} <= {spec.d})", failed="b>d")

    N0 = find_N0(spec)
    candidates = {
        "N0,i=1": float(fitness_ratio(spec, N0, 1)),
        "N0,i=N0-1": float(fitness_ratio(spec, N0, N0 - 1)),
        "limit,i=1": spec.base_fitness(spec.d) / spec.base_fitness(spec.b),
        "limit,i=N-1": spec.base_fitness(spec.c) / spec.base_fitness(spec.a),
    }
    alpha_source = min(candidates, key=candidates.get)
    gamma_source = max(candidates, key=candidates.get)
    alpha = candidates[alpha_source]
    gamma = candidates[gamma_source]
    return DominanceCertificate(
        spec=spec,
        N0=N0,
        alpha=alpha,
        gamma=gamma,
        rho=math.exp(-2.0 * (1.0 - gamma)),
        theta=math.exp(-2.0 * (1.0 - alpha) / alpha),
        lam=offspring_mean(spec),
        alpha_source=alpha_source,
        gamma_source=gamma_source,
    )
