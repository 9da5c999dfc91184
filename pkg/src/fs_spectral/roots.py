"""Bracketed, bisection-safeguarded Newton iteration for increasing maps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketExpansionExceeded, ToleranceNotReached

EPS = np.finfo(float).eps
BRACKET_LIMIT = 1e8
MAX_ITER = 200


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    iterations: int
    history: tuple


def bracket_increasing(phi: Callable[[float], float], limit: float = BRACKET_LIMIT) -> tuple[float, float]:
    """Grow [-1, 1] by doubling until ``phi(lo) <= 0 <= phi(hi)``."""
    lo, hi = -1.0, 1.0
    while phi(lo) > 0:
        if -lo > limit:
            raise BracketExpansionExceeded(f"no sign change on [-{limit:g}, {hi:g}]")
        hi = lo
        lo *= 2.0
    while phi(hi) < 0:
        if hi > limit:
            raise BracketExpansionExceeded(f"no sign change on [{lo:g}, {limit:g}]")
        lo = hi
        hi *= 2.0
    return lo, hi


def safeguarded_newton(
    phi: Callable[[float], float],
    dphi: Callable[[float], float],
    lo: float,
    hi: float,
    t0: float,
    tol: float,
    max_iter: int = MAX_ITER,
) -> RootResult:
    """Root of a nondecreasing ``phi`` inside ``[lo, hi]``.

    Newton steps that leave the current bracket (or meet a zero slope) are
    replaced by bisection.  Iteration stops once the step is at rounding
    level and ``|phi| <= tol``; stopping on the residual alone would accept
    t = 0 for modes whose data sit far below ``tol``.
    """
    t = min(max(t0, lo), hi)
    history = [t]
    v = phi(t)
    for it in range(1, max_iter + 1):
        if v == 0.0:
            return RootResult(t, 0.0, it - 1, tuple(history))
        if v < 0:
            lo = t
        else:
            hi = t
        d = dphi(t)
        t_new = t - v / d if d > 0 and np.isfinite(d) else np.nan
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        step = abs(t_new - t)
        t = t_new
        history.append(t)
        v = phi(t)
        small_step = step <= 4 * EPS * abs(t) or step < 1e-300
        collapsed = hi - lo <= 4 * EPS * max(abs(lo), abs(hi))
        if (small_step or collapsed) and abs(v) <= tol:
            return RootResult(t, abs(v), it, tuple(history))
        if collapsed:
            break
    if abs(v) <= tol:
        return RootResult(t, abs(v), len(history) - 1, tuple(history))
    raise ToleranceNotReached(f"|phi| = {abs(v):.3e} > tol = {tol:.3e} after {len(history) - 1} iterations")
