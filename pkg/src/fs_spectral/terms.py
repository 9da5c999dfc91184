"""Scalar convex term families f_n and the scalar solvers built on them.

Builtin kinds
-------------
``zero``
    f_n = 0.
``log-cosh-tilt``
    f_n(t) = mu_n log cosh t - c_n t, beta_n = mu_n + |c_n|.
``arctan-potential-tilt``
    f_n(t) = nu_n (t arctan t - log(1 + t^2)/2) - c_n t,
    beta_n = (pi/2) nu_n + |c_n|.  This beta covers both the linear bound
    |potential| <= (pi/2)|t| and the quadratic one |potential| <= t^2/2.
``custom-tabulated``
    Per-mode value and derivative tables on a shared grid, interpolated by
    cubic Hermite splines and extended linearly past the grid.  Only grid
    checks certify these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import BracketExpansionExceeded, IndexOutOfRange, NoInteriorMinimum
from .generators import ParamSequence
from .roots import MAX_ITER, RootResult, bracket_increasing, safeguarded_newton
from .sequences import UNDERFLOW

KINDS = ("zero", "log-cosh-tilt", "arctan-potential-tilt", "custom-tabulated")
LOG2 = math.log(2.0)
TEST_GRID = np.linspace(-50.0, 50.0, 2001)
DEFAULT_TOL = 1e-14


# -- scalar kernels (vectorised over numpy arrays) ---------------------------


def logcosh(t):
    a = np.abs(t)
    return a + np.log1p(np.exp(-2.0 * a)) - LOG2


def sech2(t):
    e = np.exp(-2.0 * np.abs(t))
    return 4.0 * e / (1.0 + e) ** 2


def _log1p_sq(t):
    a = np.abs(t)
    big = a > 1e150
    with np.errstate(over="ignore", divide="ignore"):
        safe = np.where(big, 1.0, a)
        return np.where(big, 2.0 * np.log(np.where(big, a, 1.0)), np.log1p(safe * safe))


def atan_potential(t):
    """t arctan t - log(1 + t^2)/2, with a series near 0 where the terms cancel."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-4
    t2 = t * t
    series = 0.5 * t2 - t2 * t2 / 12.0
    with np.errstate(over="ignore", invalid="ignore"):
        direct = t * np.arctan(t) - 0.5 * _log1p_sq(t)
    return np.where(small, series, direct)


def _kernel(kind: str, scale, tilt, t, order: int):
    if kind == "zero":
        return np.zeros(np.broadcast(scale, t).shape)
    if kind == "log-cosh-tilt":
        if order == 0:
            return scale * logcosh(t) - tilt * t
        if order == 1:
            return scale * np.tanh(t) - tilt
        return scale * sech2(t) + 0.0 * tilt
    if order == 0:
        return scale * atan_potential(t) - tilt * t
    if order == 1:
        return scale * np.arctan(t) - tilt
    return scale / (1.0 + t * t) + 0.0 * tilt


class ConvexTermFamily:
    """The family (f_n), n = 1..modes, with growth and lower-bound data.

    ``beta[n-1]`` bounds |f_n(t)| <= beta_n (1 + t^2) and ``gamma[n-1]``
    is the exact value -min f_n (from :func:`scalar_minimize`), or ``inf`` if
    f_n is unbounded below.  Parameters that are subnormal are clamped to
    zero; a clamped scale also drops the tilt so the mode becomes purely
    quadratic.  Clamped modes are listed in ``clamped``.
    """

    def __init__(
        self,
        kind: str,
        modes: int,
        scale: ParamSequence | None = None,
        tilt: ParamSequence | None = None,
        table: Mapping[str, Any] | None = None,
    ):
        if kind not in KINDS:
            raise ValueError(f"unknown term family kind {kind!r}")
        if modes < 1:
            raise ValueError("need at least one mode")
        self.kind = kind
        self.modes = int(modes)
        self.scale_seq = scale if scale is not None else ParamSequence("zero")
        self.tilt_seq = tilt if tilt is not None else ParamSequence("zero")
        self.table = None
        self._splines = None
        if kind == "custom-tabulated":
            self._init_table(table)
            scale_v = np.ones(self.modes)
            tilt_v = np.zeros(self.modes)
            self.clamped = ()
        else:
            if kind in ("log-cosh-tilt", "arctan-potential-tilt") and scale is None:
                raise ValueError(f"{kind} needs a scale sequence")
            scale_v, tilt_v, self.clamped = self._clamp(self.scale_seq.head(self.modes), self.tilt_seq.head(self.modes))
            if np.any(scale_v < 0) or not np.all(np.isfinite(scale_v)) or not np.all(np.isfinite(tilt_v)):
                raise ValueError("scale must be finite and non-negative, tilt finite")
        if kind == "zero":
            tilt_v = np.zeros(self.modes)
        self.scale = _ro(scale_v)
        self.tilt = _ro(tilt_v)
        self.beta = _ro(self._beta(self.scale, self.tilt))
        self.gamma = _ro(self._gammas())

    # -- construction helpers -------------------------------------------

    @staticmethod
    def _clamp(scale_v, tilt_v):
        scale_v = scale_v.copy()
        tilt_v = tilt_v.copy()
        clamped = []
        for i in range(scale_v.size):
            hit = False
            if 0 < abs(scale_v[i]) < UNDERFLOW:
                scale_v[i] = 0.0
                if tilt_v[i] != 0:
                    tilt_v[i] = 0.0
                hit = True
            if 0 < abs(tilt_v[i]) < UNDERFLOW:
                tilt_v[i] = 0.0
                hit = True
            if hit:
                clamped.append(i + 1)
        return scale_v, tilt_v, tuple(clamped)

    def _init_table(self, table):
        if table is None:
            raise ValueError("custom-tabulated family needs a table")
        grid = np.asarray(table["grid"], dtype=float)
        values = np.asarray(table["values"], dtype=float)
        derivs = np.asarray(table["derivatives"], dtype=float)
        if values.shape != (self.modes, grid.size) or derivs.shape != values.shape:
            raise ValueError("table shape must be (modes, len(grid))")
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("table grid must be strictly increasing")
        self.table = {"grid": grid.tolist(), "values": values.tolist(), "derivatives": derivs.tolist()}
        self._grid = grid
        self._tab_v = values
        self._tab_d = derivs
        self._splines = [CubicHermiteSpline(grid, values[i], derivs[i]) for i in range(self.modes)]

    def _beta(self, scale, tilt):
        if self.kind == "zero":
            return np.zeros(scale.size)
        if self.kind == "log-cosh-tilt":
            return scale + np.abs(tilt)
        if self.kind == "arctan-potential-tilt":
            return 0.5 * np.pi * scale + np.abs(tilt)
        grid = self._grid
        return np.max(np.abs(self._tab_v) / (1.0 + grid**2), axis=1)

    def _gammas(self):
        out = np.zeros(self.modes)
        for n in range(1, self.modes + 1):
            if self.kind != "custom-tabulated" and self.tilt[n - 1] == 0.0:
                continue
            try:
                _, out[n - 1] = scalar_minimize(self, n)
            except NoInteriorMinimum:
                out[n - 1] = np.inf
        return out

    def beta_beyond(self, n: np.ndarray) -> np.ndarray:
        """beta_n for indices past the stored modes, straight from the generators."""
        n = np.asarray(n)
        if self.kind in ("zero", "custom-tabulated"):
            return np.zeros(n.shape)
        scale_v, tilt_v, _ = self._clamp(self.scale_seq.values(n), self.tilt_seq.values(n))
        return self._beta(scale_v, tilt_v)

    def with_modes(self, modes: int) -> "ConvexTermFamily":
        if self.kind == "custom-tabulated":
            raise ValueError("a tabulated family has a fixed number of modes")
        return ConvexTermFamily(self.kind, modes, self.scale_seq, self.tilt_seq)

    # -- evaluation -------------------------------------------------------

    def _check(self, n: int):
        if not 1 <= n <= self.modes:
            raise IndexOutOfRange(f"mode {n} outside 1..{self.modes}")

    def _custom(self, n: int, t, order: int):
        t = np.asarray(t, dtype=float)
        g = self._grid
        lo, hi = g[0], g[-1]
        sp = self._splines[n - 1]
        inside = sp(np.clip(t, lo, hi), order)
        if order == 0:
            d_lo, d_hi = self._tab_d[n - 1, 0], self._tab_d[n - 1, -1]
            v_lo, v_hi = self._tab_v[n - 1, 0], self._tab_v[n - 1, -1]
            return np.where(t < lo, v_lo + d_lo * (t - lo), np.where(t > hi, v_hi + d_hi * (t - hi), inside))
        if order == 2:
            return np.where((t < lo) | (t > hi), 0.0, inside)
        return inside

    def at(self, n: int, t, order: int = 0):
        """f_n^(order)(t) for one mode; ``t`` may be an array."""
        self._check(n)
        if self.kind == "custom-tabulated":
            out = self._custom(n, t, order)
        else:
            out = _kernel(self.kind, self.scale[n - 1], self.tilt[n - 1], np.asarray(t, dtype=float), order)
        return float(out) if np.ndim(out) == 0 else out

    def _vector(self, x, order: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        m = x.size
        if m > self.modes:
            raise IndexOutOfRange(f"{m} coordinates for {self.modes} modes")
        if self.kind == "custom-tabulated":
            return np.array([self._custom(n, x[n - 1], order) for n in range(1, m + 1)], dtype=float)
        return _kernel(self.kind, self.scale[:m], self.tilt[:m], x, order)

    def values(self, x) -> np.ndarray:
        """(f_1(x_1), ..., f_m(x_m)) for a coordinate vector of length m."""
        return self._vector(x, 0)

    def derivatives(self, x) -> np.ndarray:
        return self._vector(x, 1)

    def curvatures(self, x) -> np.ndarray:
        return self._vector(x, 2)

    def grid_table(self, grid=TEST_GRID, order: int = 0) -> np.ndarray:
        """Matrix of f_n^(order) on ``grid``; row n-1 belongs to mode n."""
        if self.kind == "custom-tabulated":
            return np.array([self._custom(n, grid, order) for n in range(1, self.modes + 1)])
        return _kernel(self.kind, self.scale[:, None], self.tilt[:, None], np.asarray(grid)[None, :], order)

    def to_spec(self) -> dict:
        if self.kind == "custom-tabulated":
            return {"kind": self.kind, **self.table}
        spec = {"kind": self.kind}
        if self.kind != "zero":
            spec["scale"] = self.scale_seq.spec
            spec["tilt"] = self.tilt_seq.spec
        return spec

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any], modes: int) -> "ConvexTermFamily":
        kind = spec["kind"]
        if kind == "custom-tabulated":
            return cls(kind, modes, table=spec)
        scale = ParamSequence(spec["scale"]) if "scale" in spec else None
        tilt = ParamSequence(spec["tilt"]) if "tilt" in spec else None
        return cls(kind, modes, scale, tilt)


def _ro(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# -- spec operations ------------------------------------------------------


def _finite(t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("argument must be finite")
    return t


def term_value(family: ConvexTermFamily, n: int, t: float) -> float:
    """f_n(t), evaluated with overflow-safe formulas."""
    return family.at(n, _finite(t), 0)


def term_derivative(family: ConvexTermFamily, n: int, t: float) -> float:
    """f_n'(t); nondecreasing in t."""
    return family.at(n, _finite(t), 1)


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    ratio: float


def derivative_bound_check(family: ConvexTermFamily, n: int, grid=TEST_GRID) -> BoundCheck:
    """Check |f_n'(t)| <= 7 beta_n (1 + |t|) on ``grid``.

    ``ratio`` is max |f_n'(t)| / (7 beta_n (1 + |t|)); the bound holds when it
    is at most 1.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.abs(grid) > 50.0):
        raise ValueError("grid must lie in [-50, 50]")
    d = np.abs(family.at(n, grid, 1))
    beta = family.beta[n - 1]
    if beta == 0.0:
        ratio = 0.0 if np.all(d == 0) else math.inf
    else:
        ratio = float(np.max(d / (7.0 * beta * (1.0 + np.abs(grid)))))
    return BoundCheck(ratio <= 1.0, ratio)


def _interior_minimum_exists(family: ConvexTermFamily, n: int) -> bool:
    s, c = family.scale[n - 1], family.tilt[n - 1]
    if family.kind == "zero":
        return True
    if family.kind == "log-cosh-tilt":
        return abs(c) < s or c == 0
    if family.kind == "arctan-potential-tilt":
        return abs(c) < 0.5 * np.pi * s or c == 0
    return True


def scalar_minimize(family: ConvexTermFamily, n: int, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Minimise f_n alone: returns ``(t_n, gamma_n)`` with f_n'(t_n) = 0.

    ``gamma_n = -f_n(t_n)`` when that is non-negative, else 0.  Raises
    :class:`NoInteriorMinimum` when f_n' never changes sign, e.g.
    |c_n / nu_n| >= pi/2 for the arctan family.
    """
    family._check(n)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not _interior_minimum_exists(family, n):
        raise NoInteriorMinimum(f"mode {n}: f' has constant sign")

    def phi(t):
        return family.at(n, t, 1)

    def dphi(t):
        return family.at(n, t, 2)

    if phi(0.0) == 0.0:
        t = 0.0
    else:
        try:
            lo, hi = bracket_increasing(phi)
        except BracketExpansionExceeded as exc:
            raise NoInteriorMinimum(f"mode {n}: {exc}") from exc
        s = family.scale[n - 1]
        t0 = family.tilt[n - 1] / s if s > 0 else 0.5 * (lo + hi)
        t = safeguarded_newton(phi, dphi, lo, hi, t0, tol).root
    fmin = family.at(n, t, 0)
    return t, max(0.0, -fmin)


def shifted_root(
    a: float,
    family: ConvexTermFamily,
    n: int,
    rhs: float,
    tol: float = DEFAULT_TOL,
    t0: float | None = None,
    max_iter: int = MAX_ITER,
) -> RootResult:
    """Full iteration record for the root of a t + f_n'(t) = rhs."""
    if not a > 0:
        raise ValueError("a must be positive")
    family._check(n)
    rhs = _finite(rhs)

    def phi(t):
        return a * t + family.at(n, t, 1) - rhs

    def dphi(t):
        return a + family.at(n, t, 2)

    lo, hi = bracket_increasing(phi)
    if t0 is None:
        t0 = rhs / a
    return safeguarded_newton(phi, dphi, lo, hi, t0, tol, max_iter)


def solve_shifted_root(
    a: float,
    family: ConvexTermFamily,
    n: int,
    rhs: float,
    tol: float = DEFAULT_TOL,
    t0: float | None = None,
) -> float:
    """Unique t with a t + f_n'(t) = rhs, for a > 0."""
    return shifted_root(a, family, n, rhs, tol, t0).root
