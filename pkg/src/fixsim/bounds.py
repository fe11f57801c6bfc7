"""Exponential sandwiches, infinite-population limits and the PD tightness classifier."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .branching import solve_q
from .errors import BelowN0, NotPD
from .game import DominanceCertificate, GameSpec


class BoundSource(str, enum.Enum):
    WF_THM31 = "WF_Thm31"
    MORAN_APP = "Moran_App"
    LIMIT = "Limit"


@dataclass(frozen=True)
class BoundReport:
    N: Optional[int]
    i: int
    lower: float
    upper: float
    source: BoundSource

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"inconsistent bounds {self.lower} > {self.upper}")

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def exponential_profile(base: float, N: int, i: int) -> float:
    """``(1 - base^i) / (1 - base^N)`` computed through ``expm1`` to survive ``base -> 1``."""
    if i == 0:
        return 0.0
    if i == N:
        return 1.0
    log_base = math.log(base)
    return math.expm1(i * log_base) / math.expm1(N * log_base)


def _sandwich(cert, N, i, lower_base, upper_base, source):
    if N < cert.N0:
        raise BelowN0(N, cert.N0)
    if not 0 <= i <= N:
        raise ValueError(f"state {i} outside 0..{N}")
    return BoundReport(N, i, exponential_profile(lower_base, N, i),
                       exponential_profile(upper_base, N, i), source)


def wf_fixation_bounds(cert: DominanceCertificate, N: int, i: int) -> BoundReport:
    return _sandwich(cert, N, i, cert.rho, cert.theta, BoundSource.WF_THM31)


def moran_fixation_bounds(cert: DominanceCertificate, N: int, i: int) -> BoundReport:
    return _sandwich(cert, N, i, cert.gamma, cert.alpha, BoundSource.MORAN_APP)


def wf_limit(cert: DominanceCertificate, i: int) -> float:
    """``lim_N p_N(i) = 1 - q^i`` for the Wright-Fisher chain."""
    q = solve_q(cert.lam).q
    return -math.expm1(i * math.log(q))


def moran_limit(cert: DominanceCertificate, i: int) -> float:
    """``lim_N p_N(i) = 1 - lam^{-i}`` for the Moran chain."""
    return -math.expm1(-i * math.log(cert.lam))


class TightnessKind(str, enum.Enum):
    ALWAYS_TIGHT = "AlwaysTight"
    TIGHT_IFF_W_GEQ = "TightIffWGeq"
    TIGHT_ONLY_W1 = "TightOnlyW1"
    NEVER_TIGHT = "NeverTight"
    INFEASIBLE = "Infeasible"


class PDTightness(NamedTuple):
    kind: TightnessKind
    threshold: Optional[float] = None

    def holds_at(self, w: float) -> bool:
        if self.kind is TightnessKind.ALWAYS_TIGHT:
            return 0.0 < w <= 1.0
        if self.kind is TightnessKind.TIGHT_IFF_W_GEQ:
            return self.threshold <= w <= 1.0
        if self.kind is TightnessKind.TIGHT_ONLY_W1:
            return w == 1.0
        return False


def _sign(x: float, scale: float, rel_tol: float) -> int:
    # values within rel_tol * scale of zero count as exact ties
    if abs(x) <= rel_tol * scale:
        return 0
    return 1 if x > 0 else -1


def classify_pd_tightness(spec: GameSpec, rel_tol: float = 1e-12) -> PDTightness:
    """When does ``1/lam`` coincide with the optimal upper ratio bound for a prisoner's dilemma?

    Compares ``lam = (1-w+wb)/(1-w+wd)`` with ``(1-w+wa)/(1-w+wc)``; the
    inequality ``lam <= ...`` is ``(1-w)(c+b-a-d) <= w(ad-bc)``, whose solution
    set in ``w`` depends on the signs of ``ad - bc`` and ``c + b - a - d``.
    Ties are detected with relative tolerance ``rel_tol``, so payoffs that
    agree only after rounding are treated as exact ties.
    """
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    if not (b > d > a > c):
        raise NotPD(f"payoffs do not satisfy b > d > a > c: a={a}, b={b}, c={c}, d={d}")
    det = a * d - b * c
    gap = c + b - a - d
    s_det = _sign(det, max(a * d, b * c), rel_tol)
    s_gap = _sign(gap, max(abs(a), abs(b), abs(c), abs(d)), rel_tol)
    if s_det >= 0 and s_gap <= 0:
        return PDTightness(TightnessKind.ALWAYS_TIGHT)
    if s_det > 0 and s_gap > 0:
        return PDTightness(TightnessKind.TIGHT_IFF_W_GEQ, 1.0 / (1.0 + det / gap))
    if s_det == 0 and s_gap > 0:
        return PDTightness(TightnessKind.TIGHT_ONLY_W1)
    if s_det < 0 and s_gap >= 0:
        return PDTightness(TightnessKind.NEVER_TIGHT)
    return PDTightness(TightnessKind.INFEASIBLE)


def write_bounds_csv(fh, rows):
    """Rows ``N,i,lower,exact,upper,source``; ``exact`` may be None."""
    writer = csv.writer(fh)
    writer.writerow(["N", "i", "lower", "exact", "upper", "source"])
    for report, exact in rows:
        ex = "" if exact is None else f"{exact:.12g}"
        writer.writerow([report.N, report.i, f"{report.lower:.12g}", ex,
                         f"{report.upper:.12g}", report.source.value])
