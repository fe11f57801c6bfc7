"""Data generators behind the reproduction subcommands.

Each function returns plain rows (named tuples) so that callers can write
them as CSV/JSON or inspect them directly.
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional, Sequence

from .branching import fixation_time_window, solve_q
from .chains import ChainKernel, RngStream, empirical_time_cdf, monte_carlo_fixation
from .coupling import estimate_C0
from .errors import DomainError
from .exact import SOLVER_CAP, solve_fixation
from .fitting import fit_qn
from .game import GameSpec, certify_dominance, offspring_mean

log = logging.getLogger(__name__)

DEFAULT_GAME = GameSpec(4.0, 2.0, 3.0, 1.0, 0.3)
FIGURE1_W_GRID = tuple(round(0.05 * k, 2) for k in range(1, 21))
TABLE1_N = (10, 20, 50, 100, 500, 1000)


class Figure1Row(NamedTuple):
    w: float
    p_inf: float
    p_mc: float
    stderr: float
    p_exact: Optional[float]


def figure1(w_grid: Sequence[float] = FIGURE1_W_GRID, payoffs=(4.0, 2.0, 3.0, 1.0), N: int = 100,
            i: int = 1, replicas: int = 10_000, seed: int = 0, workers: Optional[int] = None,
            exact: bool = True) -> list:
    """Fixation of a single mutant against ``w``: limit, Monte Carlo and exact values."""
    rows = []
    for k, w in enumerate(w_grid):
        if not 0.0 < w <= 1.0:
            raise DomainError(f"grid point w={w} outside (0, 1]")
        spec = GameSpec(*payoffs, w)
        lam = offspring_mean(spec)
        p_inf = 1.0 - solve_q(lam).q
        kernel = ChainKernel.wright_fisher(spec, N)
        # distinct seed per grid point keeps points independent
        mc = monte_carlo_fixation(kernel, i, replicas, seed + 1_000_003 * k, workers=workers)
        p_exact = float(solve_fixation(kernel)[i]) if exact and N <= SOLVER_CAP else None
        rows.append(Figure1Row(w, p_inf, mc.point, mc.std_error, p_exact))
    return rows


class Table1Row(NamedTuple):
    N: int
    q_N: float
    q_N_minus_q: float
    source: str


def fixation_profile(spec: GameSpec, N: int, states: Sequence[int], replicas: int = 10_000,
                     seed: int = 0, cap: int = SOLVER_CAP, workers: Optional[int] = None):
    """``p_N(i)`` for the given states, exactly when ``N <= cap`` and by Monte Carlo otherwise."""
    kernel = ChainKernel.wright_fisher(spec, N)
    if N <= cap:
        p = solve_fixation(kernel, cap=cap)
        return [float(p[i]) for i in states], "exact"
    values = [monte_carlo_fixation(kernel, i, replicas, seed + 7919 * i, workers=workers).point
              for i in states]
    return values, "mc"


def table1(spec: GameSpec = DEFAULT_GAME, Ns: Sequence[int] = TABLE1_N, i_max: int = 10,
           replicas: int = 10_000, seed: int = 0, cap: int = SOLVER_CAP,
           workers: Optional[int] = None) -> list:
    """Fitted ``q_N`` from ``p_N(i)``, ``i = 1..min(i_max, N-1)``, and its gap to ``q``."""
    q = solve_q(certify_dominance(spec).lam).q
    rows = []
    for N in Ns:
        states = list(range(1, min(i_max, N - 1) + 1))
        values, source = fixation_profile(spec, N, states, replicas, seed, cap, workers)
        fit = fit_qn(list(zip(states, values)))
        rows.append(Table1Row(N, fit.q_fit, fit.q_fit - q, source))
    return rows


class LogplotRow(NamedTuple):
    N: int
    i: int
    value: float


def logplot(spec: GameSpec = DEFAULT_GAME, Ns: Sequence[int] = (10, 100, 1000),
            states: Sequence[int] = (1, 2, 3, 4, 5), caption_literal: bool = False,
            replicas: int = 10_000, seed: int = 0, cap: int = SOLVER_CAP,
            workers: Optional[int] = None) -> list:
    """``-(1/i) log`` of the extinction probability ``1 - p_N(i)`` (or of ``p_N(i)``).

    Rows whose quantity is zero are skipped with a warning.
    """
    rows = []
    for N in Ns:
        valid = [i for i in states if 0 < i <= N]
        values, _ = fixation_profile(spec, N, valid, replicas, seed, cap, workers)
        for i, p in zip(valid, values):
            x = p if caption_literal else 1.0 - p
            if x <= 0.0:
                log.warning("skipping N=%d, i=%d: quantity is zero", N, i)
                continue
            rows.append(LogplotRow(N, i, -math.log(x) / i))
    return rows


class FixtimeRow(NamedTuple):
    m: int
    lower: float
    empirical: float
    upper: float
    stderr: float


class FixtimeResult(NamedTuple):
    rows: list
    C0: float
    C0_estimated: bool
    windows: list


def fixtime(spec: GameSpec = DEFAULT_GAME, N: int = 2000, k: int = 1, horizons: Sequence[int] = (1, 2, 3, 4, 5),
            J: Optional[int] = None, eta: float = 1.5, C0: Optional[float] = None,
            replicas: int = 10_000, c0_replicas: int = 100_000, seed: int = 0,
            workers: Optional[int] = None) -> FixtimeResult:
    """Empirical absorption-time CDF next to the branching window at each horizon.

    When ``C0`` is not given it is estimated with :func:`estimate_C0`, which is
    an empirical value rather than a proven constant.
    """
    cert = certify_dominance(spec)
    J = math.ceil(N**0.6) if J is None else J
    estimated = C0 is None
    if C0 is None:
        C0 = estimate_C0(spec, N, J, c0_replicas, RngStream(seed, 1 << 20)).value
    kernel = ChainKernel.wright_fisher(spec, N)
    emp = empirical_time_cdf(kernel, k, replicas, seed, horizons, workers=workers)
    rows, windows = [], []
    for point in emp:
        win = fixation_time_window(k, point.m, N, J, eta, C0, cert)
        if win.vacuous:
            log.warning("window at m=%d is vacuous after clamping", point.m)
        windows.append(win)
        rows.append(FixtimeRow(point.m, win.lower, point.p, win.upper, point.std_error))
    return FixtimeResult(rows, float(C0), estimated, windows)

