"""Palais-Smale diagnostics for finite sequences of points, and the
chain-rule check behind transporting the PS condition along a basis map.

Dual convergence is judged only against explicit envelope boxes.  The
weighted sums sum g_n^2 n^{2k} are reported but never used to classify:
at finite truncation they can grow while every envelope dual norm tends to
zero (take g^{(j)} = j^{-1} e_{j^2}).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .functional import FsFunctional, directional, evaluate, grad
from .sequences import CompactEnvelope, csum, dual_seminorm_t, seminorm_s
from .transforms import BasisMap, pullback

GROWTH_SLOPE = 0.5
DUAL_DROP = 1e-3
PS_DUAL_TOL = 1e-8
CAUCHY_TOL = 1e-8


def _energy_growth_slope(values: np.ndarray) -> float:
    """Log-log slope of the running max of |F| over the second half of the indices."""
    run = np.maximum.accumulate(np.abs(values))
    j = np.arange(1, values.size + 1, dtype=float)
    half = values.size // 2
    x = np.log(j[half:])
    y = np.log(np.maximum(run[half:], 1e-300))
    if x.size < 2 or np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class PsReport:
    energy_values: np.ndarray
    energy_bound: float
    energy_slope: float
    energy_bounded: bool
    dual_norms: dict  # envelope spec (str) -> array over points
    dual_decreasing: dict
    weighted_l2_grad: dict  # k -> array over points (auxiliary)
    seminorm_trace: dict  # k -> successive distances |x^{(j+1)} - x^{(j)}|_{s,k}
    cauchy: dict
    ps_consistent: bool = field(default=False)

    def to_dict(self) -> dict:
        return {
            "energy_values": self.energy_values.tolist(),
            "energy_bound": self.energy_bound,
            "energy_slope": self.energy_slope,
            "energy_bounded": self.energy_bounded,
            "dual_norms": {k: v.tolist() for k, v in self.dual_norms.items()},
            "dual_decreasing": self.dual_decreasing,
            "weighted_l2_grad": {str(k): v.tolist() for k, v in self.weighted_l2_grad.items()},
            "seminorm_trace": {str(k): v.tolist() for k, v in self.seminorm_trace.items()},
            "cauchy": {str(k): v for k, v in self.cauchy.items()},
            "ps_consistent": self.ps_consistent,
        }


def _envelope_key(K: CompactEnvelope) -> str:
    spec = K.generator.spec
    if spec.get("gen") == "exp" and set(spec) <= {"gen", "M", "rho"}:
        return f"exp:{spec['M']!r},{spec['rho']!r}"
    return repr(spec)


def check_ps_sequence(
    F: FsFunctional,
    points: Sequence,
    envelopes: Sequence[CompactEnvelope] | None = None,
    k_list: Sequence[int] = (0, 1, 2),
) -> PsReport:
    """Classify a finite sequence of points as a candidate PS sequence.

    * energy is unbounded when the running max of |F(x^{(j)})| still grows
      like j^p with p > 0.5 over the second half of the sequence;
    * dual norms are decreasing when the last is below 1e-3 times the first;
    * the sequence looks Cauchy in seminorm k when the successive distances
      over the last quarter fall below 1e-8 (1 + max_j |x^{(j)}|_{s,k}).

    ``ps_consistent`` requires bounded energy and every final dual norm
    below 1e-8.
    """
    if len(points) < 2:
        raise ValueError("need at least two points")
    envelopes = list(envelopes) if envelopes else [CompactEnvelope()]
    pts = [F._coords(p) for p in points]

    energies = np.array([evaluate(F, p) for p in pts])
    grads = [grad(F, p).entries for p in pts]
    n = np.arange(1, F.modes + 1, dtype=float)

    slope = _energy_growth_slope(energies)
    bounded = bool(np.all(np.isfinite(energies)) and slope <= GROWTH_SLOPE)

    duals = {}
    decreasing = {}
    for K in envelopes:
        key = _envelope_key(K)
        d = np.array([dual_seminorm_t(g, K) for g in grads])
        duals[key] = d
        decreasing[key] = bool(d[-1] < d[0] * DUAL_DROP)

    weighted = {}
    trace = {}
    cauchy = {}
    q = max(1, (len(pts) - 1) // 4)
    for k in k_list:
        w = n ** (2 * k)
        weighted[k] = np.array([csum(g * g * w) for g in grads])
        steps = np.array([seminorm_s(pts[j + 1] - pts[j], k) for j in range(len(pts) - 1)])
        trace[k] = steps
        scale = 1.0 + max(seminorm_s(p, k) for p in pts)
        cauchy[k] = bool(steps[-q:].max() <= CAUCHY_TOL * scale)

    finals_small = all(d[-1] <= PS_DUAL_TOL for d in duals.values())
    return PsReport(
        energy_values=energies,
        energy_bound=float(np.max(np.abs(energies))),
        energy_slope=slope,
        energy_bounded=bounded,
        dual_norms=duals,
        dual_decreasing=decreasing,
        weighted_l2_grad=weighted,
        seminorm_trace=trace,
        cauchy=cauchy,
        ps_consistent=bool(bounded and finals_small),
    )


def invariance_discrepancies(F: FsFunctional, L: BasisMap, points: Sequence, directions: Sequence) -> np.ndarray:
    """Per pair: |DF(x)(h) - DG(Lx)(Lh)| / sum |g_n h_n|, with G the pullback.

    A pair whose normaliser vanishes counts as exact agreement when both
    sides are zero and as the absolute difference otherwise.
    """
    if len(points) != len(directions):
        raise ValueError("points and directions must pair up")
    G = pullback(F, L)
    out = []
    for x, h in zip(points, directions):
        xv, hv = F._coords(x), F._coords(h)
        lhs = directional(F, xv, hv)
        rhs = G.derivative(L.function(xv), L.function(hv))
        scale = csum(np.abs(grad(F, xv).entries * hv))
        diff = abs(lhs - rhs)
        out.append(diff / scale if scale > 0 else diff)
    return np.array(out)


def invariance_check(F: FsFunctional, L: BasisMap, points: Sequence, directions: Sequence) -> float:
    """Largest relative chain-rule discrepancy over the (point, direction) pairs."""
    d = invariance_discrepancies(F, L, points, directions)
    return float(d.max(initial=0.0))
