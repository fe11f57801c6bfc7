"""One-parameter least-squares fit of ``p_i = 1 - q^i``."""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateInput

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class FitResult(NamedTuple):
    q_fit: float
    sse: float
    inputs: tuple
    unimodal: bool


def _sse(q, i, p):
    return float(np.sum((p + np.expm1(i * math.log(q))) ** 2))


def golden_section(fn, lo, hi, width=1e-10, max_iter=500):
    """Minimise a unimodal ``fn`` on ``[lo, hi]`` until the bracket is narrower than ``width``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= width:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def fit_qn(pairs: Sequence, lo: float = 1e-9, hi: float = 1.0 - 1e-9, grid: int = 2001) -> FitResult:
    """Best ``q`` in ``(lo, hi)`` for observed ``(i, p_i)`` pairs.

    A coarse grid locates the basin first (and records whether the SSE looks
    unimodal on it); golden-section search then refines inside the two grid
    cells around the grid minimum.
    """
    pairs = tuple((int(i), float(p)) for i, p in pairs)
    if len(pairs) < 2:
        raise DegenerateInput("need at least two (i, p_i) pairs")
    i = np.array([a for a, _ in pairs], dtype=float)
    p = np.array([b for _, b in pairs])
    if np.any((p < 0) | (p > 1)):
        raise DegenerateInput("p_i must lie in [0, 1]")
    if np.all((p == 0) | (p == 1)):
        raise DegenerateInput("all p_i are 0 or 1; q is not identifiable")

    qs = np.linspace(lo, hi, grid)
    values = np.array([_sse(q, i, p) for q in qs])
    k = int(np.argmin(values))
    steps = np.sign(np.diff(values))
    steps = steps[steps != 0]
    unimodal = int(np.count_nonzero(np.diff(steps) != 0)) <= 1
    a = qs[max(k - 1, 0)]
    b = qs[min(k + 1, grid - 1)]
    q = golden_section(lambda x: _sse(x, i, p), a, b)
    return FitResult(q_fit=q, sse=_sse(q, i, p), inputs=pairs, unimodal=unimodal)
