"""Unique global minimiser of an F_s-functional by decoupled per-mode solves.

F is separable, so its stationarity system a_n x_n + f_n'(x_n) = 0 is
diagonal.  Each mode is an increasing scalar equation solved by the
safeguarded Newton iteration in :mod:`fs_spectral.roots`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationFailed, EnvelopeTooSlow, FsError, ModeSolveFailed
from .functional import FsFunctional, data_envelope, evaluate, grad, tail_bound
from .roots import RootResult
from .sequences import CompactEnvelope, DecayTable, TruncatedSequence, csum, decay_fit, dual_seminorm_t
from .terms import shifted_root, term_derivative, term_value

THREADS_ENV = "FS_SPECTRAL_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1").strip() or "1"
    n = int(raw)
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def _map_modes(fn, modes):
    workers = worker_count()
    if workers == 1:
        return [fn(n) for n in modes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, modes))


def initial_guess(F: FsFunctional, n: int) -> float:
    """Linearisation a_n t + f_n'(0) = 0, i.e. t = c_n / a_n for tilted families."""
    return -F.terms.at(n, 0.0, 1) / F.a[n - 1]


def _solve_mode(F: FsFunctional, n: int, tol: float, offset: float) -> RootResult:
    try:
        return shifted_root(F.a[n - 1], F.terms, n, 0.0, tol, initial_guess(F, n) + offset)
    except FsError as exc:
        raise ModeSolveFailed(n, exc) from exc


@dataclass(frozen=True)
class SolveReport:
    minimizer: TruncatedSequence
    residuals: np.ndarray
    energy: float
    tail_energy_bound: float
    dual_grad_norm: float
    decay_table: DecayTable
    tol: float
    iterations: np.ndarray
    envelope: CompactEnvelope = field(default_factory=CompactEnvelope)
    clamped: tuple = ()

    @property
    def modes(self) -> int:
        return len(self.minimizer)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max())

    def to_dict(self) -> dict:
        return {
            "modes": self.modes,
            "tol": self.tol,
            "energy": self.energy,
            "tail_energy_bound": self.tail_energy_bound,
            "dual_grad_norm": self.dual_grad_norm,
            "dual_envelope": self.envelope.generator.spec,
            "max_residual": self.max_residual,
            "minimizer": self.minimizer.entries.tolist(),
            "residuals": self.residuals.tolist(),
            "iterations": self.iterations.tolist(),
            "decay_table": self.decay_table.to_list(),
            "clamped_modes": list(self.clamped),
        }


def minimize(
    F: FsFunctional,
    tol: float = 1e-12,
    envelope: CompactEnvelope | None = None,
    offset: float = 0.0,
) -> SolveReport:
    """Solve every mode of a_n t + f_n'(t) = 0 and assemble a :class:`SolveReport`.

    ``offset`` shifts every Newton start, which is how start-independence
    is probed.
    """
    env = envelope if envelope is not None else CompactEnvelope()
    results = _map_modes(lambda n: _solve_mode(F, n, tol, offset), range(1, F.modes + 1))
    x = np.array([r.root for r in results])
    g = grad(F, x).entries
    residuals = np.abs(g)
    try:
        tail = tail_bound(F, data_envelope(F))
    except EnvelopeTooSlow:
        tail = math.inf
    xs = TruncatedSequence(x)
    return SolveReport(
        minimizer=xs,
        residuals=residuals,
        energy=evaluate(F, xs),
        tail_energy_bound=tail,
        dual_grad_norm=dual_seminorm_t(g, env),
        decay_table=decay_fit(xs, 6),
        tol=tol,
        iterations=np.array([r.iterations for r in results]),
        envelope=env,
        clamped=F.terms.clamped,
    )


def minimize_adaptive(
    F: FsFunctional,
    tol: float = 1e-12,
    tol_tail: float = 1e-30,
    start: int = 16,
    limit: int = 1 << 14,
) -> tuple[FsFunctional, SolveReport]:
    """Double N until the tail bound is below ``tol_tail`` and the last
    quarter of |x*| is below 1e-15 max|x*|.  ``F`` supplies the generators."""
    N = start
    while True:
        FN = F.with_modes(N)
        report = minimize(FN, tol)
        x = np.abs(report.minimizer.entries)
        q = max(1, N // 4)
        small_tail = x[-q:].max() <= 1e-15 * x.max() if x.max() > 0 else True
        if report.tail_energy_bound < tol_tail and small_tail:
            return FN, report
        N *= 2
        if N > limit:
            raise EnvelopeTooSlow(f"no admissible truncation up to N = {limit}")


def newton_path(F: FsFunctional, tol: float = 1e-12, offset: float = 0.0) -> list[TruncatedSequence]:
    """Iterates of the per-mode Newton solves, stacked into points of s.

    Point j holds every mode's j-th iterate (converged modes stay put).
    """
    results = [_solve_mode(F, n, tol, offset) for n in range(1, F.modes + 1)]
    length = max(len(r.history) for r in results)
    return [
        TruncatedSequence([r.history[min(j, len(r.history) - 1)] for r in results])
        for j in range(length)
    ]


@dataclass(frozen=True)
class Certificate:
    ok: bool
    details: dict


def certify(F: FsFunctional, report: SolveReport, tol: float | None = None) -> Certificate:
    """Re-verify a :class:`SolveReport` along an independent scalar path.

    Residuals, energy and dual gradient norm are recomputed mode by mode
    with the scalar term functions, and every mode is re-solved from a start
    shifted by +1.  Raises :class:`CertificationFailed` at the first
    discrepancy.
    """
    tol = report.tol if tol is None else tol
    x = report.minimizer.entries
    if x.size != F.modes:
        raise CertificationFailed(f"report has {x.size} modes, functional {F.modes}")
    a = F.a
    res = np.empty(F.modes)
    energy_terms = np.empty(F.modes)
    for i in range(F.modes):
        n = i + 1
        res[i] = abs(a[i] * x[i] + term_derivative(F.terms, n, x[i]))
        energy_terms[i] = 0.5 * a[i] * x[i] * x[i] + term_value(F.terms, n, x[i])
    for i in range(F.modes):
        if abs(res[i] - report.residuals[i]) > 1e-15 + 1e-9 * res[i]:
            raise CertificationFailed(
                f"mode {i + 1}: reported residual {report.residuals[i]:.3e}, recomputed {res[i]:.3e}", mode=i + 1
            )
        if res[i] > tol:
            raise CertificationFailed(f"mode {i + 1}: residual {res[i]:.3e} exceeds tol {tol:.3e}", mode=i + 1)
    energy = csum(energy_terms)
    if abs(energy - report.energy) > 1e-12 * (1.0 + abs(energy)):
        raise CertificationFailed(f"energy mismatch: reported {report.energy!r}, recomputed {energy!r}")
    zero_energy = evaluate(F, np.zeros(F.modes))
    if energy > zero_energy + 1e-12:
        raise CertificationFailed(f"energy {energy!r} exceeds F(0) = {zero_energy!r}")
    g = a * x + np.array([term_derivative(F.terms, n, x[n - 1]) for n in range(1, F.modes + 1)])
    dual = dual_seminorm_t(g, report.envelope)
    if abs(dual - report.dual_grad_norm) > 1e-15 + 1e-9 * dual:
        raise CertificationFailed(f"dual gradient norm mismatch: {report.dual_grad_norm!r} vs {dual!r}")
    worst_shift = 0.0
    for n in range(1, F.modes + 1):
        t = _solve_mode(F, n, tol, 1.0).root
        shift = abs(t - x[n - 1])
        worst_shift = max(worst_shift, shift)
        if shift > 10 * tol:
            raise CertificationFailed(f"mode {n}: perturbed start gives {t!r}, report {x[n - 1]!r}", mode=n)
    return Certificate(
        True,
        {
            "max_residual": float(res.max()),
            "energy": energy,
            "zero_energy": zero_energy,
            "dual_grad_norm": dual,
            "max_restart_shift": worst_shift,
        },
    )
