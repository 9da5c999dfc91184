"""F_s-functionals F(x) = 1/2 sum a_n x_n^2 + sum f_n(x_n) at finite truncation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import EnvelopeTooSlow, ModeMismatch
from .generators import ParamSequence
from .sequences import (
    CompactEnvelope,
    TemperedGradient,
    TruncatedSequence,
    as_array,
    csum,
    decay_fit,
)
from .terms import TEST_GRID, ConvexTermFamily, derivative_bound_check


class CoefficientFamily:
    """The quadratic weights a_n with declared bounds alpha <= a_n <= M.

    Undeclared bounds default to the observed min/max over the stored
    modes.  Declared bounds are not enforced here; :func:`condition_report`
    flags them.
    """

    def __init__(self, sequence: ParamSequence, modes: int, alpha: float | None = None, M: float | None = None):
        self.sequence = sequence
        self.modes = int(modes)
        a = sequence.head(self.modes)
        if not np.all(np.isfinite(a)):
            raise ValueError("coefficients must be finite")
        a.setflags(write=False)
        self.a = a
        self.declared_alpha = alpha
        self.declared_M = M
        self.alpha = float(alpha) if alpha is not None else float(a.min())
        self.M = float(M) if M is not None else float(a.max())
        if not self.alpha > 0 or not self.M > 0:
            raise ValueError("alpha and M must be positive")

    def with_modes(self, modes: int) -> "CoefficientFamily":
        return CoefficientFamily(self.sequence, modes, self.declared_alpha, self.declared_M)

    def to_spec(self) -> dict:
        spec: dict[str, Any] = {"sequence": self.sequence.spec}
        if self.declared_alpha is not None:
            spec["alpha"] = self.declared_alpha
        if self.declared_M is not None:
            spec["M"] = self.declared_M
        return spec

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any], modes: int) -> "CoefficientFamily":
        return cls(ParamSequence(spec["sequence"]), modes, spec.get("alpha"), spec.get("M"))


class FsFunctional:
    """A coefficient family and a term family sharing the modes 1..N."""

    def __init__(self, coeffs: CoefficientFamily, terms: ConvexTermFamily):
        if coeffs.modes != terms.modes:
            raise ModeMismatch(f"coefficients cover {coeffs.modes} modes, terms {terms.modes}")
        self.coeffs = coeffs
        self.terms = terms
        self.modes = terms.modes

    @property
    def a(self) -> np.ndarray:
        return self.coeffs.a

    def with_modes(self, modes: int) -> "FsFunctional":
        return FsFunctional(self.coeffs.with_modes(modes), self.terms.with_modes(modes))

    def to_spec(self) -> dict:
        return {"coeffs": self.coeffs.to_spec(), "terms": self.terms.to_spec(), "modes": self.modes}

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any], modes: int | None = None) -> "FsFunctional":
        modes = int(modes if modes is not None else spec["modes"])
        return cls(
            CoefficientFamily.from_spec(spec["coeffs"], modes),
            ConvexTermFamily.from_spec(spec["terms"], modes),
        )

    def _coords(self, x) -> np.ndarray:
        if isinstance(x, TruncatedSequence):
            return x.padded(self.modes)
        a = as_array(x)
        if a.size > self.modes:
            raise ModeMismatch(f"{a.size} coordinates for {self.modes} modes")
        return np.pad(a, (0, self.modes - a.size))

    def __call__(self, x) -> float:
        return evaluate(self, x)


def evaluate(F: FsFunctional, x) -> float:
    """F(x) over the stored modes; missing trailing coordinates count as 0."""
    v = F._coords(x)
    return csum(0.5 * F.a * v * v + F.terms.values(v))


def grad(F: FsFunctional, x) -> TemperedGradient:
    """g_n = a_n x_n + f_n'(x_n)."""
    v = F._coords(x)
    return TemperedGradient(F.a * v + F.terms.derivatives(v))


def directional(F: FsFunctional, x, h) -> float:
    """DF(x)(h) = sum g_n h_n."""
    g = grad(F, x).entries
    return csum(g * F._coords(h))


def data_envelope(F: FsFunctional) -> CompactEnvelope:
    """Box containing the minimiser: |x_n*| <= |f_n'(0)| / alpha.

    Monotonicity of f_n' puts a_n x_n* + f_n'(0) and x_n* on the same side
    of the stationarity equation, so a_n |x_n*| <= |f_n'(0)|.
    """
    terms = F.terms
    if terms.kind == "custom-tabulated":
        d0 = np.abs([terms.at(n, 0.0, 1) for n in range(1, terms.modes + 1)])
        return CompactEnvelope(ParamSequence.explicit(d0 / F.coeffs.alpha))
    if terms.kind == "zero":
        return CompactEnvelope.zero()
    return CompactEnvelope(terms.tilt_seq.scaled(1.0 / F.coeffs.alpha).absolute())


def _beta_at(F: FsFunctional, n: np.ndarray) -> np.ndarray:
    out = np.zeros(n.shape)
    inside = n <= F.modes
    out[inside] = F.terms.beta[n[inside] - 1]
    out[~inside] = F.terms.beta_beyond(n[~inside])
    return out


def tail_bound(
    F: FsFunctional,
    envelope: CompactEnvelope,
    N: int | None = None,
    cutoff: float = 1e-300,
    max_terms: int = 10**6,
) -> float:
    """Upper bound on the energy of modes n > N for |x_n| <= c_n.

    Per mode the bound is 1/2 M c_n^2 plus the smaller of
    beta_n (1 + c_n^2) (growth condition) and 7 beta_n (c_n + c_n^2/2)
    (integrating |f_n'| <= 7 beta_n (1 + |t|) from f_n(0) = 0).  Summation
    stops after a block whose terms all lie below ``cutoff``.
    """
    N = F.modes if N is None else int(N)
    M = F.coeffs.M
    block = 1024
    start = N + 1
    parts = []
    while True:
        n = np.arange(start, start + block)
        c = envelope.generator.values(n)
        beta = _beta_at(F, n)
        growth = beta * (1.0 + c * c)
        integrated = 7.0 * beta * (c + 0.5 * c * c)
        term = 0.5 * M * c * c + np.minimum(growth, integrated)
        parts.append(term)
        if term.max() < cutoff:
            break
        start += block
        if start > N + max_terms:
            raise EnvelopeTooSlow(f"tail terms still above {cutoff:g} after {max_terms} modes")
    return csum(np.concatenate(parts))


def select_modes(F: FsFunctional, envelope: CompactEnvelope | None = None, target: float = 1e-30, limit: int = 1 << 16) -> int:
    """Smallest N with ``tail_bound(F, envelope, N) < target``.

    ``F`` only supplies the data generators, so its own mode count does not
    matter.  The default envelope is :func:`data_envelope`.
    """
    env = envelope if envelope is not None else data_envelope(F)
    hi = 1
    while tail_bound(F, env, hi) >= target:
        hi *= 2
        if hi > limit:
            raise EnvelopeTooSlow(f"tail bound stays above {target:g} up to N = {limit}")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(F, env, mid) < target:
            hi = mid
        else:
            lo = mid
    return hi


# -- structural conditions ----------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConditionReport:
    checks: tuple
    lower_bound: float
    modes: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "modes": self.modes,
            "lower_bound": self.lower_bound,
            "checks": [{"name": c.name, "passed": c.passed, **c.detail} for c in self.checks],
        }


def condition_report(F: FsFunctional, grid=TEST_GRID) -> ConditionReport:
    """Check the structural conditions of the class F_s at truncation N.

    Entries: ``A.1`` (alpha <= a_n <= M), ``A.2.growth``,
    ``A.2.lower_bound`` and ``A.2.convexity`` (grid checks on [-50, 50]),
    ``beta_in_s`` (decay_fit of beta up to k = 4), ``gamma_cauchy`` (last
    quarter of sum gamma_n below 1e-12) and ``derivative_bound_7beta``.
    Failures are recorded, never raised.
    """
    a = F.a
    c = F.coeffs
    a1 = c.alpha > 0 and c.M >= c.alpha and a.min() >= c.alpha and a.max() <= c.M
    checks = [
        Check("A.1", bool(a1), {"alpha": c.alpha, "M": c.M, "min_a": float(a.min()), "max_a": float(a.max())}),
    ]

    terms = F.terms
    grid = np.asarray(grid, dtype=float)
    beta = terms.beta[:, None]
    gamma = terms.gamma
    vals = terms.grid_table(grid, 0)
    slack = 1e-12
    # tabulated terms have no closed-form tail argument off the grid
    scope = "grid" if terms.kind == "custom-tabulated" else "grid+analytic"
    growth_ratio = np.abs(vals) - beta * (1.0 + grid**2) * (1 + slack)
    worst_growth = float(growth_ratio.max())
    checks.append(Check("A.2.growth", worst_growth <= 1e-300, {"max_excess": worst_growth, "scope": scope}))

    finite_gamma = np.isfinite(gamma)
    excess = -(vals + gamma[:, None]) - slack * (np.abs(vals) + 1e-300)
    worst_lower = float(excess[finite_gamma].max()) if finite_gamma.any() else 0.0
    checks.append(
        Check(
            "A.2.lower_bound",
            bool(finite_gamma.all() and worst_lower <= 0 and np.all(gamma >= 0)),
            {"max_excess": worst_lower, "scope": scope, "unbounded_modes": [int(i + 1) for i in np.flatnonzero(~finite_gamma)]},
        )
    )

    d = terms.grid_table(grid, 1)
    drops = np.diff(d, axis=1)
    scale = np.maximum(np.abs(d).max(axis=1, keepdims=True), 1e-300)
    worst_drop = float((-drops / scale).max())
    checks.append(Check("A.2.convexity", worst_drop <= 1e-12, {"max_relative_drop": worst_drop, "scope": scope}))

    table = decay_fit(terms.beta, 4)
    checks.append(
        Check(
            "beta_in_s",
            not table.any_growth,
            {"decay": table.to_list(), "growing_k": [e.k for e in table.estimates if e.growing]},
        )
    )

    q = max(1, F.modes // 4)
    tail_gamma = csum(gamma[-q:]) if finite_gamma.all() else math.inf
    total_gamma = csum(gamma) if finite_gamma.all() else math.inf
    checks.append(Check("gamma_cauchy", tail_gamma < 1e-12, {"last_quarter_sum": tail_gamma, "sum": total_gamma}))

    ratios = [derivative_bound_check(terms, n, grid).ratio for n in range(1, F.modes + 1)]
    worst = max(ratios)
    checks.append(
        Check(
            "derivative_bound_7beta",
            worst <= 1.0,
            {"max_ratio": worst, "failing_modes": [i + 1 for i, r in enumerate(ratios) if r > 1.0]},
        )
    )
    return ConditionReport(tuple(checks), -total_gamma, F.modes)
