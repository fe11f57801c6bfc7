"""Exact absorption probabilities and one-step checks on the kernels."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .chains import ChainKernel, KernelKind, _birth_death_probs
from .errors import CapExceeded, DomainExit, NumericalError, SingularSystem
from .game import GameSpec, fitness_ratio, success_prob

SOLVER_CAP = 2000
CLOSED_FORM_CAP = 10**6
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class FixationVector:
    """``p[i]`` = probability of absorbing at ``N`` from ``i``, for ``i = 0..N``."""

    N: int
    p: np.ndarray
    residual: float = 0.0

    def __getitem__(self, i):
        return self.p[i]

    def __len__(self):
        return len(self.p)


def solve_fixation(kernel: ChainKernel, cap: int = SOLVER_CAP) -> FixationVector:
    """Solve ``(I - Q) p = r`` over the interior states by dense LU.

    ``Q`` is the interior-to-interior block of the transition matrix and ``r``
    the one-step probability of jumping straight to ``N``.
    """
    N = kernel.N
    if N > cap:
        raise CapExceeded(f"N={N} exceeds the dense solver cap {cap}")
    P = kernel.matrix()
    Q = P[1:N, 1:N]
    r = P[1:N, N]
    A = np.eye(N - 1) - Q
    try:
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystem("zero pivot in LU factorisation")
    interior = scipy.linalg.lu_solve((lu, piv), r)
    residual = float(np.max(np.abs(A @ interior - r)))
    if not residual <= RESIDUAL_TOL:
        raise NumericalError(f"linear solve residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    p = np.concatenate(([0.0], interior, [1.0]))
    return FixationVector(N=N, p=p, residual=residual)


class AbsorptionPair(NamedTuple):
    """Absorption probabilities at ``N`` (``fix``) and at ``0`` (``ext``) for every state."""

    fix: np.ndarray
    ext: np.ndarray


def solve_absorption_reduced(kernel: ChainKernel) -> AbsorptionPair:
    """Absorption probabilities by state reduction, without subtractions.

    Interior states are censored out one at a time in increasing order; the
    escape mass of the eliminated state is summed over its off-diagonal
    entries instead of being formed as ``1 - P[k, k]``. Back substitution
    then only adds and multiplies non-negative numbers, so both vectors keep
    their relative accuracy even where one of them is far below machine
    epsilon. O(N^3), intended for small and moderate N.
    """
    N = kernel.N
    M = kernel.matrix()
    rows, escape = {}, {}
    for k in range(1, N):
        row = M[k].copy()
        row[k] = 0.0
        total = row.sum()
        if not total > 0.0:
            raise SingularSystem(f"state {k} cannot be left")
        rows[k], escape[k] = row, total
        rest = slice(k + 1, N)
        weights = M[rest, k].copy()
        M[rest] += np.outer(weights, row / total)
        M[rest, k] = 0.0
    fix = np.zeros(N + 1)
    ext = np.zeros(N + 1)
    fix[N] = 1.0
    ext[0] = 1.0
    for k in range(N - 1, 0, -1):
        fix[k] = rows[k] @ fix / escape[k]
        ext[k] = rows[k] @ ext / escape[k]
    return AbsorptionPair(fix=fix, ext=ext)


def _log_cumulative_products(spec: GameSpec, N: int) -> np.ndarray:
    # log prod_{k<=j} g/f for j = 1..N-1
    ratios = fitness_ratio(spec, N, np.arange(1, N))
    return np.cumsum(np.log(ratios))


def moran_closed_form_vector(spec: GameSpec, N: int) -> np.ndarray:
    """Birth-death fixation probabilities for all ``i = 0..N`` in O(N)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if N > CLOSED_FORM_CAP:
        raise CapExceeded(f"N={N} exceeds the closed-form cap {CLOSED_FORM_CAP}")
    # prepend log(1) for the leading 1 in numerator and denominator
    logs = np.concatenate(([0.0], _log_cumulative_products(spec, N)))
    log_partial = np.logaddexp.accumulate(logs)
    log_den = log_partial[-1]
    p = np.empty(N + 1)
    p[0] = 0.0
    p[1:N] = np.exp(log_partial[: N - 1] - log_den)
    p[N] = 1.0
    return p


def moran_closed_form(spec: GameSpec, N: int, i: int) -> float:
    if not 0 <= i <= N:
        raise ValueError(f"state {i} outside 0..{N}")
    if i == 0:
        return 0.0
    if i == N:
        return 1.0
    if N > CLOSED_FORM_CAP:
        raise CapExceeded(f"N={N} exceeds the closed-form cap {CLOSED_FORM_CAP}")
    logs = np.concatenate(([0.0], _log_cumulative_products(spec, N)))
    return float(np.exp(logsumexp(logs[:i]) - logsumexp(logs)))


class Direction(str, enum.Enum):
    SUB = "sub"
    SUPER = "super"


class MartingaleReport(NamedTuple):
    """Worst relative violation of ``E[base^X' | i] <= base^i`` (sub) or ``>=`` (super).

    ``max_violation`` is ``<= 0`` when the inequality holds at every interior state.
    """

    ok: bool
    max_violation: float
    worst_state: int
    slack: float


def one_step_ratio(kernel: ChainKernel, base: float) -> np.ndarray:
    """``E[base^X' | X = i] / base^i`` for interior ``i = 1..N-1``."""
    N = kernel.N
    i = np.arange(1, N)
    if kernel.kind is KernelKind.WRIGHT_FISHER:
        xi = success_prob(kernel.spec, N, i)
        # binomial generating function (xi*base + 1 - xi)^N
        log_ratio = N * np.log1p(-xi * (1.0 - base)) - i * math.log(base)
        return np.exp(log_ratio)
    down, stay, up = _birth_death_probs(kernel, i)
    return stay + up * base + down / base


def check_one_step_martingale(kernel: ChainKernel, base: float, direction,
                              slack: float = 1e-12) -> MartingaleReport:
    if not 0.0 < base < 1.0:
        raise ValueError("base must lie in (0, 1)")
    direction = Direction(direction)
    ratio = one_step_ratio(kernel, base)
    excess = ratio - 1.0 if direction is Direction.SUB else 1.0 - ratio
    worst = int(np.argmax(excess))
    value = float(excess[worst])
    return MartingaleReport(ok=value <= slack, max_violation=value, worst_state=worst + 1, slack=slack)


PARAMETERS = ("a", "b", "c", "d", "w")


def in_sensitivity_domain(spec: GameSpec) -> bool:
    """Open set where the derivative signs are claimed: ``0<w<1``, ``a>c>0``, ``b>d>0``."""
    return 0.0 < spec.w < 1.0 and spec.a > spec.c > 0 and spec.b > spec.d > 0


def parameter_sensitivity(spec: GameSpec, N: int, i: int, param: str, h: Optional[float] = None,
                          kind: KernelKind = KernelKind.WRIGHT_FISHER) -> float:
    """Central finite difference of ``p_N(i)`` in one of ``a, b, c, d, w``.

    Uses :func:`solve_absorption_reduced`, which resolves ``1 - p`` even when
    ``p`` rounds to 1.
    """
    if param not in PARAMETERS:
        raise ValueError(f"unknown parameter {param!r}")
    value = getattr(spec, param)
    if h is None:
        h = 1e-5 * max(1.0, abs(value))
    try:
        lo = spec.replace(**{param: value - h})
        hi = spec.replace(**{param: value + h})
    except ValueError as exc:
        raise DomainExit(str(exc)) from exc
    for s in (spec, lo, hi):
        if not in_sensitivity_domain(s):
            raise DomainExit(f"perturbing {param} by {h:g} leaves the admissible domain")
    up = solve_absorption_reduced(ChainKernel(kind, hi, N))
    down = solve_absorption_reduced(ChainKernel(kind, lo, N))
    # difference whichever of p and 1 - p is smaller so that the sign survives rounding
    if up.fix[i] <= 0.5:
        return float((up.fix[i] - down.fix[i]) / (2.0 * h))
    return float((down.ext[i] - up.ext[i]) / (2.0 * h))


def write_fixation_csv(fh, fix: FixationVector, lower=None, upper=None):
    """Rows ``i,p_lower_bound,p,p_upper_bound``; bound columns are left blank when absent."""
    writer = csv.writer(fh)
    writer.writerow(["i", "p_lower_bound", "p", "p_upper_bound"])
    for i in range(fix.N + 1):
        lo = "" if lower is None else f"{lower[i]:.12g}"
        up = "" if upper is None else f"{upper[i]:.12g}"
        writer.writerow([i, lo, f"{fix.p[i]:.12g}", up])
