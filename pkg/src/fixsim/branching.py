"""Poisson Galton-Watson approximation of the Wright-Fisher chain near ``i = 0``.

Covers the extinction probability ``q``, the exact extinction-time CDF via
generating-function iteration, the fractional-linear brackets on that CDF,
the maximal-inequality tail bound and the resulting window on the
Wright-Fisher absorption-time distribution.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import optimize, stats

from .chains import RngStream, Trajectory
from .errors import BelowN0, DomainError, Subcritical
from .game import DominanceCertificate


@dataclass(frozen=True)
class PoissonBP:
    lam: float

    def __post_init__(self):
        if not self.lam > 1.0:
            raise Subcritical(f"offspring mean must exceed 1, got {self.lam}")

    def pgf(self, s):
        return np.exp(-self.lam * (1.0 - np.asarray(s)))


class ExtinctionSolution(NamedTuple):
    q: float
    lambda_q: float
    lam: float

    @property
    def residual(self) -> float:
        return abs(self.q - math.exp(-self.lam * (1.0 - self.q)))


def _check_supercritical(lam):
    if not lam > 1.0:
        raise Subcritical(f"offspring mean must exceed 1, got {lam}")


def solve_q(lam: float) -> ExtinctionSolution:
    """Root of ``q = exp(-lam (1 - q))`` in (0, 1) for a supercritical mean ``lam``.

    Bisection runs on ``u = 1 - q`` (the equation reads ``-u - expm1(-lam u) = 0``,
    free of cancellation near ``q = 1``); a few contraction steps of the fixed
    point then restore relative accuracy when ``q`` is tiny.
    """
    _check_supercritical(lam)
    u = optimize.bisect(lambda u: -u - math.expm1(-lam * u), 1e-15, 1.0,
                        xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    q = 1.0 - u
    for _ in range(100):
        nxt = math.exp(-lam * (1.0 - q))
        if nxt == q:
            break
        q = nxt
    return ExtinctionSolution(q=q, lambda_q=lam * q, lam=lam)


def extinction_cdf_exact(lam: float, k: int, m: int) -> float:
    """``P(Z_m = 0 | Z_0 = k)``: the ``m``-fold pgf iterate at 0, raised to ``k``."""
    if k < 0 or m < 0:
        raise ValueError("k and m must be non-negative")
    s = 0.0
    for _ in range(m):
        s = math.exp(-lam * (1.0 - s))
    return s**k


class FractionalLinearParams(NamedTuple):
    s1: float
    s2: float
    q: float
    lam: float


def fractional_linear_params(lam: float) -> FractionalLinearParams:
    sol = solve_q(lam)
    lq = sol.lambda_q
    s1 = (4.0 - lq * lq) / lq
    s2 = lam * math.exp(-lam) / (lq + math.exp(-lq) - 1.0)
    return FractionalLinearParams(s1=s1, s2=s2, q=sol.q, lam=lam)


def _fractional_linear(q, s, lq_m):
    return q * s * (1.0 - lq_m) / (s - lq_m)


def extinction_cdf_bounds(lam: float, k: int, m: int):
    """Lower and upper fractional-linear brackets on ``P(T_0 <= m | Z_0 = k)``."""
    _check_supercritical(lam)
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    prm = fractional_linear_params(lam)
    lq_m = (lam * prm.q) ** m
    lower = _fractional_linear(prm.q, prm.s1, lq_m) ** k
    upper = _fractional_linear(prm.q, prm.s2, lq_m) ** k
    return lower, upper


def theta_eta(eta: float, lam: float) -> float:
    """Largest ``theta`` with ``e^x - 1 <= eta x`` on ``[0, theta / lam]``.

    Equal to ``lam * x*`` where ``x*`` is the positive root of ``e^x - 1 = eta x``.
    """
    if not eta > 1.0:
        raise DomainError(f"eta must exceed 1, got {eta}")

    def gap(x):
        return math.expm1(x) - eta * x

    lo = (eta - 1.0) / 2.0 if eta < 2.0 else math.log(eta)
    hi = max(2.0 * lo, 1.0)
    while gap(hi) <= 0.0:
        hi *= 2.0
    x_star = optimize.bisect(gap, lo, hi, xtol=1e-13, maxiter=500)
    return lam * x_star


def _safe_exp(x):
    return math.inf if x > 709.0 else math.exp(x)


def max_exceedance_bound(k: int, m: int, J: float, eta: float, lam: float) -> float:
    """Upper bound on ``P(max_{t<=m} Z_t >= J | Z_0 = k)``."""
    theta = theta_eta(eta, lam)
    return _safe_exp(theta * lam**-m * (k * eta**m * lam**m - J))


class TimeWindow(NamedTuple):
    """Bounds on ``P(T <= m | X_0 = k)`` with the terms that make them up."""

    lower: float
    upper: float
    lower_raw: float
    upper_raw: float
    branching_lower: float
    branching_upper: float
    escape_term: float
    coupling_term: float
    exceedance_term: float

    @property
    def vacuous(self) -> bool:
        return self.lower <= 0.0 and self.upper >= 1.0


def fixation_time_window(k: int, m: int, N: int, J: int, eta: float, C0: float,
                         cert: DominanceCertificate) -> TimeWindow:
    """Window on the Wright-Fisher absorption-time CDF from the branching approximation.

    ``C0`` is the constant in the one-step mismatch bound ``C0 i^{3/2} / N``;
    it must be supplied (see :func:`fixsim.coupling.estimate_C0`). Raw values
    keep the algebra unclamped; ``lower``/``upper`` are clipped to [0, 1].
    """
    if N < cert.N0:
        raise BelowN0(N, cert.N0)
    if not 0 < J < N:
        raise DomainError(f"J={J} must be an interior state of 0..{N}")
    if not C0 > 0:
        raise DomainError("C0 must be positive")
    lam = cert.lam
    b_lo, b_up = extinction_cdf_bounds(lam, k, m)
    theta = theta_eta(eta, lam)
    growth = k * eta**m * lam**m
    escape = _safe_exp(theta * lam**-m * (growth - N))
    exceed = _safe_exp(theta * lam**-m * (growth - J))
    coupling = m * C0 * J**1.5 / N
    upper_raw = b_up + escape + coupling + exceed
    lower_raw = b_lo - coupling - exceed
    return TimeWindow(
        lower=min(max(lower_raw, 0.0), 1.0),
        upper=min(max(upper_raw, 0.0), 1.0),
        lower_raw=lower_raw,
        upper_raw=upper_raw,
        branching_lower=b_lo,
        branching_upper=b_up,
        escape_term=escape,
        coupling_term=coupling,
        exceedance_term=exceed,
    )


_POISSON_INVERSION_MAX = 30.0


def poisson_cdf_table(mean: float, tail: float = 1e-15) -> np.ndarray:
    top = int(stats.poisson.isf(tail, mean)) + 1
    cdf = stats.poisson.cdf(np.arange(top + 1), mean)
    cdf[-1] = 1.0
    return cdf


def offspring_sum(lam: float, parents: int, gen: np.random.Generator, table=None) -> int:
    """Total offspring of ``parents`` individuals, one inverted uniform per parent."""
    if parents == 0:
        return 0
    if lam > _POISSON_INVERSION_MAX:
        return int(gen.poisson(lam * parents))
    table = poisson_cdf_table(lam) if table is None else table
    u = gen.random(parents)
    return int(np.searchsorted(table, u, side="right").sum())


def simulate_bp(lam: float, initial: int, max_steps: int, stop_at: Optional[int] = None,
                rng: Optional[RngStream] = None) -> Trajectory:
    """Galton-Watson path with Poisson(``lam``) offspring.

    Stops at extinction, at the first generation with ``Z >= stop_at`` (when
    given), or after ``max_steps`` generations. ``absorbed_at`` is 0 on
    extinction, the reached size when the threshold stops the run, else None.
    """
    if initial < 0:
        raise ValueError("initial size must be non-negative")
    gen = (rng or RngStream(0)).generator()
    table = poisson_cdf_table(lam)
    z = initial
    states = [z]
    t = 0
    while z > 0 and t < max_steps and (stop_at is None or z < stop_at):
        z = offspring_sum(lam, z, gen, table)
        t += 1
        states.append(z)
    if z == 0:
        absorbed = 0
    elif stop_at is not None and z >= stop_at:
        absorbed = z
    else:
        absorbed = None
    return Trajectory(initial=initial, states=tuple(states), absorbed_at=absorbed, steps=t)


def bp_paths(lam: float, k: int, m: int, paths: int, rng: RngStream) -> np.ndarray:
    """``paths`` independent generation sequences ``Z_0..Z_m`` as an array.

    Uses ``Generator.poisson(lam * Z)`` per generation, which has the same law
    as summing ``Z`` Poisson(lam) offspring counts.
    """
    gen = rng.generator()
    out = np.empty((paths, m + 1), dtype=np.int64)
    out[:, 0] = k
    for t in range(m):
        out[:, t + 1] = gen.poisson(lam * out[:, t])
    return out


def write_window_csv(fh, rows):
    """Rows of ``(m, lower, empirical, upper)``."""
    writer = csv.writer(fh)
    writer.writerow(["m", "lower", "empirical", "upper"])
    for m, lo, emp, up in rows:
        writer.writerow([m, f"{lo:.12g}", f"{emp:.12g}", f"{up:.12g}"])
