"""Basis isomorphisms between s and spaces of smooth functions.

Each :class:`BasisMap` pairs an ``analyze`` step (function samples to
coefficients, by quadrature) with a ``synthesize`` step (coefficients to
function values).  Functions enter as vectorised callables evaluated at the
quadrature nodes.

Coefficient conventions, all 1-based in the sequence index k:

* ``fourier-periodic``: f = x_1/2 + sum x_{2n} cos(nt) + x_{2n+1} sin(nt) on [-pi, pi].
* ``hermite``: f = sum x_k H_{k-1}, H_j the L^2-orthonormal Hermite functions.
* ``chebyshev``: f(y) = sum sqrt(2 pi) x_k T_{k-1}(y), y the affine image of [a, b].
* ``dab-chain``: phi(t) = f(eta) with eta = tan(pi (t - a)/(b - a) - pi/2), f Hermite.
* ``sine-0-pi``: u = sum x_n sqrt(2/pi) sin(n t) on [0, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import zeta

from .errors import LengthMismatch, ModeMismatch, PointOutOfDomain, QuadratureNotConverged
from .functional import FsFunctional, directional, evaluate
from .sequences import TruncatedSequence, as_array

KINDS = ("fourier-periodic", "hermite", "chebyshev", "dab-chain", "sine-0-pi")

CHANGE_TOL = 1e-10
MAX_NODES = 1 << 18
SQRT_2PI = math.sqrt(2.0 * math.pi)
SINE_NORM = math.sqrt(2.0 / math.pi)
PI_QUARTER = math.pi ** -0.25
# sup_t |H_k(t)| <= CRAMER * pi^{-1/4} for every k.
CRAMER = 1.086435

GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


def _sample(f: Callable, t: np.ndarray) -> np.ndarray:
    out = np.asarray(f(t), dtype=float)
    if out.shape != t.shape:
        out = np.broadcast_to(out, t.shape) if out.ndim == 0 else np.vectorize(lambda v: float(f(v)))(t)
    if not np.all(np.isfinite(out)):
        raise ValueError("function samples must be finite")
    return np.asarray(out, dtype=float)


def _refine(compute: Callable[[int], np.ndarray], start: int, fixed: int | None) -> tuple[np.ndarray, int]:
    """Double the node count from ``start`` until successive results agree
    to CHANGE_TOL (scaled by max(1, |x|)).  ``fixed`` disables adaptivity."""
    if fixed is not None:
        return compute(int(fixed)), int(fixed)
    q = int(start)
    prev = compute(q)
    while True:
        q *= 2
        if q > MAX_NODES:
            raise QuadratureNotConverged(f"no agreement to {CHANGE_TOL:g} with up to {MAX_NODES} nodes")
        cur = compute(q)
        change = float(np.max(np.abs(cur - prev), initial=0.0))
        if change <= CHANGE_TOL * max(1.0, float(np.max(np.abs(cur), initial=0.0))):
            return cur, q
        prev = cur


# -- Hermite functions ---------------------------------------------------------


def hermite_matrix(count: int, t) -> np.ndarray:
    """Rows H_0..H_{count-1} evaluated at the points ``t``.

    The normalised three-term recurrence is run on H_k e^{t^2/2} with a
    per-point log scale, so nothing overflows or underflows prematurely
    far outside the oscillatory region.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    out = np.zeros((count, t.size))
    if count == 0:
        return out
    log_scale = -0.5 * t * t
    prev = np.zeros(t.size)
    cur = np.full(t.size, PI_QUARTER)

    def emit(row, p):
        with np.errstate(divide="ignore", under="ignore"):
            out[row] = np.sign(p) * np.exp(np.log(np.abs(p)) + log_scale)

    emit(0, cur)
    for k in range(count - 1):
        nxt = math.sqrt(2.0 / (k + 1)) * t * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur[big] /= _RESCALE
            prev[big] /= _RESCALE
            log_scale[big] += _LOG_RESCALE
        emit(k + 1, cur)
    return out


def hermite_eval(k: int, t):
    """H_k(t), the k-th L^2-orthonormal Hermite function."""
    if k < 0:
        raise ValueError("Hermite index must be >= 0")
    vals = hermite_matrix(k + 1, t)[k]
    return float(vals[0]) if np.ndim(t) == 0 else vals


def hermite_derivative_coeffs(x) -> np.ndarray:
    """Coefficients of f' for f = sum x_k H_{k-1}; one entry longer than x.

    Uses H_j' = sqrt(j/2) H_{j-1} - sqrt((j+1)/2) H_{j+1}.
    """
    c = as_array(x)
    out = np.zeros(c.size + 1)
    j = np.arange(c.size, dtype=float)
    out[1:] -= np.sqrt((j + 1) / 2.0) * c
    out[: c.size - 1] += np.sqrt(j[1:] / 2.0) * c[1:]
    return out


def hermite_half_width(N: int) -> float:
    return math.sqrt(2.0 * (2 * N + 1)) + 6.0


def _trapezoid_nodes(lo: float, hi: float, q: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(lo, hi, q + 1)
    w = np.full(q + 1, (hi - lo) / q)
    w[0] *= 0.5
    w[-1] *= 0.5
    return t, w


def _hermite_project(f: Callable, N: int, fixed: int | None) -> tuple[np.ndarray, int]:
    T = hermite_half_width(N)

    def compute(q):
        t, w = _trapezoid_nodes(-T, T, q)
        return hermite_matrix(N, t) @ (w * _sample(f, t))

    return _refine(compute, max(64, 8 * N), fixed)


def hermite_analyze(f: Callable, N: int, nodes: int | None = None) -> TruncatedSequence:
    """x_k = <f, H_{k-1}> by the trapezoid rule on [-T, T]."""
    return TruncatedSequence(_hermite_project(f, N, nodes)[0])


def hermite_synthesize(x, t, m: int = 0) -> np.ndarray:
    """m-th derivative of sum x_k H_{k-1} at the points ``t``."""
    c = as_array(x)
    for _ in range(m):
        c = hermite_derivative_coeffs(c)
    return c @ hermite_matrix(c.size, t)


# -- Fourier -------------------------------------------------------------------


def fourier_pack(a0: float, a, b) -> TruncatedSequence:
    """x_1 = a0, x_{2n} = a_n, x_{2n+1} = b_n."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"{a.size} cosine and {b.size} sine coefficients")
    x = np.empty(1 + 2 * a.size)
    x[0] = a0
    x[1::2] = a
    x[2::2] = b
    return TruncatedSequence(x)


def fourier_unpack(x) -> tuple[float, np.ndarray, np.ndarray]:
    """Inverse of :func:`fourier_pack`; an even-length x gets a final b_n = 0."""
    v = as_array(x)
    if v.size == 0:
        return 0.0, np.zeros(0), np.zeros(0)
    if v.size % 2 == 0:
        v = np.append(v, 0.0)
    return float(v[0]), v[1::2].copy(), v[2::2].copy()


def _fourier_coeffs(f: Callable, N: int, fixed: int | None) -> tuple[np.ndarray, int]:
    H = N // 2
    n = np.arange(1, H + 1)

    def compute(q):
        t = -math.pi + 2.0 * math.pi * np.arange(q) / q
        v = _sample(f, t)
        a0 = 2.0 * math.fsum(v) / q
        ang = np.outer(n, t)
        a = (2.0 / q) * (np.cos(ang) @ v)
        b = (2.0 / q) * (np.sin(ang) @ v)
        return fourier_pack(a0, a, b).entries[:N]

    return _refine(compute, max(16, 8 * N), fixed)


def fourier_analyze(f: Callable, N: int, nodes: int | None = None) -> TruncatedSequence:
    """Packed Fourier coefficients by the periodic trapezoid rule on [-pi, pi)."""
    return TruncatedSequence(_fourier_coeffs(f, N, nodes)[0])


def fourier_synthesize(x, t) -> np.ndarray:
    a0, a, b = fourier_unpack(x)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = np.arange(1, a.size + 1)
    ang = np.outer(t, n)
    return 0.5 * a0 + np.cos(ang) @ a + np.sin(ang) @ b


# -- Chebyshev -----------------------------------------------------------------


def _check_unit_interval(y: np.ndarray) -> None:
    if np.any(~np.isfinite(y)) or np.any(np.abs(y) > 1.0):
        bad = y[~(np.abs(y) <= 1.0)]
        raise PointOutOfDomain(f"point {bad[0]!r} outside [-1, 1]")


def chebyshev_synthesize(x, y):
    """sum sqrt(2 pi) x_k T_{k-1}(y) by the Clenshaw recurrence."""
    c = as_array(x)
    yy = np.atleast_1d(np.asarray(y, dtype=float))
    _check_unit_interval(yy)
    b1 = np.zeros(yy.shape)
    b2 = np.zeros(yy.shape)
    for k in range(c.size - 1, 0, -1):
        b1, b2 = 2.0 * yy * b1 - b2 + c[k], b1
    out = SQRT_2PI * (yy * b1 - b2 + (c[0] if c.size else 0.0))
    return float(out[0]) if np.ndim(y) == 0 else out


def _chebyshev_coeffs(phi: Callable, a: float, b: float, N: int, fixed: int | None) -> tuple[np.ndarray, int]:
    if not a < b:
        raise ValueError("need a < b")
    k = np.arange(N)

    def compute(q):
        theta = (2 * np.arange(q) + 1) * math.pi / (2 * q)
        y = np.cos(theta)
        v = _sample(phi, a + 0.5 * (b - a) * (y + 1.0))
        c = (2.0 / q) * (np.cos(np.outer(k, theta)) @ v)
        c[0] *= 0.5
        return c / SQRT_2PI

    return _refine(compute, max(8, 4 * N), fixed)


def chebyshev_analyze(phi: Callable, a: float, b: float, N: int, nodes: int | None = None) -> TruncatedSequence:
    """x_k = c_{k-1}(phi o affine) / sqrt(2 pi) by Gauss-Chebyshev quadrature."""
    return TruncatedSequence(_chebyshev_coeffs(phi, a, b, N, nodes)[0])


# -- D[a, b] -------------------------------------------------------------------


def dab_pull(phi: Callable, a: float, b: float) -> Callable:
    """eta -> phi(a + (b - a)/pi (arctan(eta) + pi/2)), a Schwartz function."""
    return lambda eta: _sample(phi, a + (b - a) / math.pi * (np.arctan(eta) + 0.5 * math.pi))


def dab_analyze(phi: Callable, a: float, b: float, N: int, nodes: int | None = None) -> TruncatedSequence:
    if not a < b:
        raise ValueError("need a < b")
    return hermite_analyze(dab_pull(phi, a, b), N, nodes)


def dab_synthesize(x, t, a: float, b: float) -> np.ndarray:
    """phi(t) for t in [a, b]; zero at and outside the endpoints."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(t.shape)
    inside = (t > a) & (t < b)
    eta = np.tan(math.pi * (t[inside] - a) / (b - a) - 0.5 * math.pi)
    out[inside] = hermite_synthesize(x, eta)
    return out


# -- sine basis on [0, pi] -----------------------------------------------------


def sine_basis(n: int, t, m: int = 0):
    """m-th derivative of sqrt(2/pi) sin(n t)."""
    t = np.asarray(t, dtype=float)
    return SINE_NORM * float(n) ** m * np.sin(n * t + 0.5 * m * math.pi)


def _gauss_legendre_panels(lo: float, hi: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule: GL_ORDER Gauss-Legendre points on each of ``panels`` equal panels."""
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return t, w


def _sine_coeffs(f: Callable, N: int, fixed: int | None) -> tuple[np.ndarray, int]:
    n = np.arange(1, N + 1)

    def compute(panels):
        t, w = _gauss_legendre_panels(0.0, math.pi, panels)
        return SINE_NORM * (np.sin(np.outer(n, t)) @ (w * _sample(f, t)))

    return _refine(compute, max(8, N), fixed)


def sine_analyze(f: Callable, N: int, nodes: int | None = None) -> TruncatedSequence:
    return TruncatedSequence(_sine_coeffs(f, N, nodes)[0])


def sine_values(x, t, m: int = 0) -> np.ndarray:
    c = as_array(x)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = np.arange(1, c.size + 1, dtype=float)
    return SINE_NORM * (np.sin(np.outer(t, n) + 0.5 * m * math.pi) @ (c * n**m))


# -- Weierstrass tail bounds ---------------------------------------------------


@dataclass(frozen=True)
class SeriesEvaluation:
    """Values of a truncated derivative series plus a bound on the omitted tail.

    ``tail_bound`` bounds sup_t |sum_{n>N} x_n phi_n^{(m)}(t)| given
    |x_n| <= C_k n^{-k}; ``k`` is the exponent that gave the smallest bound.
    """

    values: np.ndarray
    m: int
    tail_bound: float
    k: int
    C_k: float


def _log_profile_max(x: np.ndarray, n: np.ndarray, k: int) -> float:
    nz = x != 0
    if not nz.any():
        return -math.inf
    return float(np.max(np.log(np.abs(x[nz])) + k * np.log(n[nz])))


def weierstrass_tail(x, power: float, constant: float, envelope=None, extend: int = 8, span: int = 40):
    """min over k of constant * C_k * zeta(k - power, N + 1).

    The basis term n is bounded by ``constant * n**power``.  C_k is the
    largest |x_n| n^k over the stored entries and, when ``envelope`` (a
    bound c_n >= |x_n|) is given, over N < n <= extend * N as well.  With
    no envelope the stored decay stands in for the tail, which is only an
    estimate.  Returns ``(bound, k, C_k)``.
    """
    v = as_array(x)
    N = v.size
    n = np.arange(1, N + 1, dtype=float)
    ext = None
    if envelope is not None and N:
        m = np.arange(N + 1, extend * N + 1)
        ext = (envelope.generator.values(m), m.astype(float))
    k0 = int(math.floor(power)) + 2
    best = (math.inf, k0, math.inf)  # (log bound, k, log C_k)
    for k in range(k0, k0 + span + 1):
        logC = _log_profile_max(v, n, k)
        if ext is not None:
            logC = max(logC, _log_profile_max(ext[0], ext[1], k))
        if logC == -math.inf:
            return 0.0, k, 0.0
        log_bound = math.log(constant) + logC + math.log(zeta(k - power, N + 1))
        if log_bound < best[0]:
            best = (log_bound, k, logC)
    return math.exp(best[0]), best[1], math.exp(best[2])


def sine_synthesize(x, points, m: int = 0, envelope=None) -> SeriesEvaluation:
    """sum x_n phi_n^{(m)} at ``points`` in [0, pi], with |phi_n^{(m)}| <= sqrt(2/pi) n^m."""
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    bound, k, C = weierstrass_tail(x, m, SINE_NORM, envelope)
    return SeriesEvaluation(sine_values(x, pts, m), m, bound, k, C)


def hermite_series(x, points, m: int = 0, envelope=None) -> SeriesEvaluation:
    """m-th derivative of the Hermite series with a tail bound.

    Ladder steps give |H_{n-1}^{(m)}| <= CRAMER pi^{-1/4} (2 m n)^{m/2}.
    """
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    const = CRAMER * PI_QUARTER * (2.0 * m) ** (0.5 * m)
    bound, k, C = weierstrass_tail(x, 0.5 * m, const, envelope)
    return SeriesEvaluation(hermite_synthesize(x, pts, m), m, bound, k, C)


# -- the maps ------------------------------------------------------------------


@dataclass(frozen=True)
class BasisMap:
    """A truncated isomorphism between s and a function space.

    ``nodes`` fixes the quadrature size (intervals or nodes, panels for
    the sine map); ``None`` doubles from the default start until the
    coefficients settle.
    """

    kind: str
    N: int
    a: float = -1.0
    b: float = 1.0
    nodes: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis {self.kind!r}")
        if self.N < 1:
            raise ValueError("truncation must be >= 1")
        if self.kind in ("chebyshev", "dab-chain") and not self.a < self.b:
            raise ValueError("need a < b")

    @classmethod
    def fourier(cls, N: int, nodes: int | None = None) -> "BasisMap":
        return cls("fourier-periodic", N, -math.pi, math.pi, nodes)

    @classmethod
    def hermite(cls, N: int, nodes: int | None = None) -> "BasisMap":
        return cls("hermite", N, -math.inf, math.inf, nodes)

    @classmethod
    def chebyshev(cls, N: int, a: float = -1.0, b: float = 1.0, nodes: int | None = None) -> "BasisMap":
        return cls("chebyshev", N, a, b, nodes)

    @classmethod
    def dab(cls, N: int, a: float = -1.0, b: float = 1.0, nodes: int | None = None) -> "BasisMap":
        return cls("dab-chain", N, a, b, nodes)

    @classmethod
    def sine(cls, N: int, nodes: int | None = None) -> "BasisMap":
        return cls("sine-0-pi", N, 0.0, math.pi, nodes)

    @classmethod
    def parse(cls, text: str, N: int, nodes: int | None = None) -> "BasisMap":
        """``fourier``, ``hermite``, ``sine``, ``chebyshev[:a,b]`` or ``dab[:a,b]``."""
        name, _, args = text.partition(":")
        bounds = [float(v) for v in args.split(",")] if args else []
        if name in ("fourier", "fourier-periodic"):
            return cls.fourier(N, nodes)
        if name == "hermite":
            return cls.hermite(N, nodes)
        if name in ("sine", "sine-0-pi"):
            return cls.sine(N, nodes)
        if name == "chebyshev":
            return cls.chebyshev(N, *bounds, nodes=nodes)
        if name in ("dab", "dab-chain"):
            return cls.dab(N, *bounds, nodes=nodes)
        raise ValueError(f"unknown basis {text!r}")

    @property
    def domain(self) -> tuple[float, float]:
        return self.a, self.b

    @property
    def quadrature(self) -> dict:
        rule = {
            "fourier-periodic": "periodic trapezoid on [-pi, pi), start 8N",
            "hermite": "trapezoid on [-T, T], T = sqrt(2(2N+1)) + 6, start max(64, 8N)",
            "dab-chain": "arctan substitution, then the Hermite rule",
            "chebyshev": "Gauss-Chebyshev, start 4N",
            "sine-0-pi": "composite 20-point Gauss-Legendre on [0, pi], start max(8, N) panels",
        }[self.kind]
        return {"rule": rule, "nodes": self.nodes, "change_tol": CHANGE_TOL}

    def analyze_nodes(self, f: Callable) -> tuple[TruncatedSequence, int]:
        """Coefficients of ``f`` and the node count that produced them."""
        if self.kind == "fourier-periodic":
            x, q = _fourier_coeffs(f, self.N, self.nodes)
        elif self.kind == "hermite":
            x, q = _hermite_project(f, self.N, self.nodes)
        elif self.kind == "chebyshev":
            x, q = _chebyshev_coeffs(f, self.a, self.b, self.N, self.nodes)
        elif self.kind == "dab-chain":
            x, q = _hermite_project(dab_pull(f, self.a, self.b), self.N, self.nodes)
        else:
            x, q = _sine_coeffs(f, self.N, self.nodes)
        return TruncatedSequence(x), q

    def analyze(self, f: Callable) -> TruncatedSequence:
        return self.analyze_nodes(f)[0]

    def synthesize(self, x, t) -> np.ndarray:
        """Function values at ``t`` for coefficients ``x`` (at most N of them)."""
        c = as_array(x)
        if c.size > self.N:
            raise ModeMismatch(f"{c.size} coefficients for a map of size {self.N}")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "fourier-periodic":
            return fourier_synthesize(c, t)
        if self.kind == "hermite":
            return hermite_synthesize(c, t)
        if self.kind == "chebyshev":
            y = 2.0 * (t - self.a) / (self.b - self.a) - 1.0
            # rounding of the affine map must not push endpoints out
            y = np.where(np.abs(y) - 1.0 < 1e-14, np.clip(y, -1.0, 1.0), y)
            return chebyshev_synthesize(c, y)
        if self.kind == "dab-chain":
            return dab_synthesize(c, t, self.a, self.b)
        return sine_values(c, t)

    def function(self, x) -> Callable:
        """The synthesised function as a vectorised callable."""
        c = as_array(x).copy()
        return lambda t: self.synthesize(c, t)

    def gram(self, count: int | None = None) -> np.ndarray:
        """Quadrature Gram matrix <e_j, e_k> of the first ``count`` basis functions."""
        count = self.N if count is None else count
        cols = [self.analyze(self.function(np.eye(count)[j])).entries[:count] for j in range(count)]
        return np.array(cols)


# -- pullback ------------------------------------------------------------------


@dataclass(frozen=True)
class PulledBack:
    """G(f) = F(analyze(f)) together with DG(f)(v) = DF(analyze f)(analyze v)."""

    F: FsFunctional
    L: BasisMap

    def __post_init__(self):
        if self.L.N != self.F.modes:
            raise ModeMismatch(f"basis truncation {self.L.N} differs from functional modes {self.F.modes}")

    def coords(self, f: Callable) -> TruncatedSequence:
        return self.L.analyze(f)

    def value(self, f: Callable) -> float:
        return evaluate(self.F, self.coords(f))

    def derivative(self, f: Callable, v: Callable) -> float:
        return directional(self.F, self.coords(f), self.coords(v))

    __call__ = value


def pullback(F: FsFunctional, L: BasisMap) -> PulledBack:
    return PulledBack(F, L)
