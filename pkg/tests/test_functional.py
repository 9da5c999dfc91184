import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fs_spectral.errors import EnvelopeTooSlow, ModeMismatch
from fs_spectral.functional import (
    CoefficientFamily,
    FsFunctional,
    condition_report,
    data_envelope,
    directional,
    evaluate,
    grad,
    select_modes,
    tail_bound,
)
from fs_spectral.generators import ParamSequence
from fs_spectral.problems import PROBLEMS, build
from fs_spectral.sequences import CompactEnvelope
from fs_spectral.terms import ConvexTermFamily, term_value

# gamma_n of the arctan example, n = 1..12, from 50-digit arithmetic
# (t_n = tan(n^2/(n+1)!), gamma_n = -f_n(t_n)).
EXAMPLE_GAMMA = [
    0.13058424044372271679,
    0.060235482741652215483,
    0.0080027790814012959784,
    0.00055720949213832781527,
    0.000024117501046776011946,
    7.086228057802259578e-7,
    1.5070412660200101934e-8,
    2.4300987095986628737e-10,
    3.0755936636466829013e-12,
    3.1380406727828788405e-14,
    2.6368258430995500244e-16,
    1.8568288004612998148e-18,
]


def quadratic(N, a=1.0):
    return FsFunctional(CoefficientFamily(ParamSequence.const(a), N), ConvexTermFamily("zero", N))


def test_evaluate_matches_termwise_sum(rng):
    F = build("p1", 16).functional
    x = rng.normal(size=16)
    naive = sum(0.5 * F.a[i] * x[i] ** 2 + term_value(F.terms, i + 1, x[i]) for i in range(16))
    assert evaluate(F, x) == pytest.approx(naive, rel=1e-14)
    assert F(x) == evaluate(F, x)


def test_short_points_are_zero_padded_and_long_ones_rejected():
    F = build("p1", 4).functional
    assert evaluate(F, [0.1]) == evaluate(F, [0.1, 0.0, 0.0, 0.0])
    with pytest.raises(ModeMismatch):
        evaluate(F, np.zeros(5))


@pytest.mark.parametrize("problem", PROBLEMS)
def test_gradient_matches_central_differences(problem, rng):
    F = build(problem, 24).functional
    K = CompactEnvelope()
    for _ in range(5):
        x = K.sample(24, rng).entries
        h = K.sample(24, rng).entries
        eps = 1e-5
        fd = (evaluate(F, x + eps * h) - evaluate(F, x - eps * h)) / (2 * eps)
        d = directional(F, x, h)
        assert d == pytest.approx(fd, rel=1e-6, abs=1e-14)


def test_directional_is_gradient_pairing(rng):
    F = build("p3", 8).functional
    x, h = rng.normal(size=8), rng.normal(size=8)
    assert directional(F, x, h) == pytest.approx(float(grad(F, x).entries @ h), rel=1e-13)


def test_condition_report_p1_passes_everything():
    report = condition_report(build("p1", 64).functional)
    assert report.passed, report.failures
    assert report.lower_bound < 0


@pytest.mark.parametrize("problem", ["p2", "p3", "example"])
def test_inverse_square_data_fail_only_the_s_membership_of_beta(problem):
    report = condition_report(build(problem, 64).functional)
    assert report.failures == ["beta_in_s"]
    assert report["beta_in_s"].detail["growing_k"] == [3, 4]


def test_condition_report_flags_declared_alpha():
    F = build("p1", 32).functional
    bad = FsFunctional(CoefficientFamily(F.coeffs.sequence, 32, alpha=1.3), F.terms)
    report = condition_report(bad)
    assert report.failures == ["A.1"]


def test_condition_report_flags_unbounded_term():
    terms = ConvexTermFamily("log-cosh-tilt", 4, ParamSequence.const(1.0), ParamSequence.const(2.0))
    F = FsFunctional(CoefficientFamily(ParamSequence.const(1.0), 4), terms)
    report = condition_report(F)
    assert "A.2.lower_bound" in report.failures
    assert report["A.2.lower_bound"].detail["unbounded_modes"] == [1, 2, 3, 4]


def test_example_gamma_against_high_precision_values():
    gamma = build("example", 12).functional.terms.gamma
    assert np.allclose(gamma, EXAMPLE_GAMMA, rtol=1e-10, atol=0)


def test_example_gamma_ratio_band():
    terms = build("example", 64).functional.terms
    n = np.arange(5, 13)
    approx = n.astype(float) ** 2 / (2.0 * np.array([math.factorial(k + 1) for k in n], dtype=float) ** 2)
    ratio = terms.gamma[4:12] / approx
    assert np.all((ratio >= 0.99) & (ratio <= 1.01))


@given(st.integers(0, 2**32 - 1))
def test_functional_bounded_below_by_minus_sum_gamma(seed):
    F = build("example", 16).functional
    lb = condition_report(F).lower_bound
    x = np.random.default_rng(seed).normal(scale=3.0, size=16)
    assert evaluate(F, x) >= lb


def test_tail_bound_geometric_oracle():
    # pure quadratic, a = 1, box c_n = e^{-n}: tail = sum_{n>N} e^{-2n}/2
    F = quadratic(10)
    got = tail_bound(F, CompactEnvelope(), 10)
    expected = 0.5 * math.exp(-22) / (1 - math.exp(-2))
    assert got == pytest.approx(expected, rel=1e-13)
    assert tail_bound(F, CompactEnvelope.zero(), 10) == 0.0


def test_tail_bound_dominates_actual_tail_energy(rng):
    N = 4
    F = build("p1", 200).functional
    env = data_envelope(F)
    bound = tail_bound(F.with_modes(N), env)
    c = env.values(200)
    for _ in range(50):
        y = rng.uniform(-1, 1, 200) * c
        y[:N] = 0.0
        assert abs(evaluate(F, y)) <= bound


def test_tail_bound_slow_envelope_raises():
    F = quadratic(4)
    slow = CompactEnvelope(ParamSequence({"gen": "exp", "M": 1.0, "rho": 0.01}))
    with pytest.raises(EnvelopeTooSlow):
        tail_bound(F, slow, max_terms=2048)


def test_select_modes_is_minimal():
    F = build("p1", 8).functional
    N = select_modes(F, target=1e-30)
    assert tail_bound(F, data_envelope(F), N) < 1e-30
    assert tail_bound(F, data_envelope(F), N - 1) >= 1e-30


def test_data_envelope_contains_minimizer():
    from fs_spectral.minimizer import minimize

    for problem in PROBLEMS:
        F = build(problem, 64).functional
        x = minimize(F).minimizer.entries
        assert np.all(np.abs(x) <= data_envelope(F).values(64) * (1 + 1e-12))


def test_spec_round_trip():
    F = build("p2", 16).functional
    G = FsFunctional.from_spec(F.to_spec())
    x = np.linspace(-1, 1, 16)
    assert evaluate(G, x) == evaluate(F, x)
    assert FsFunctional.from_spec(F.to_spec(), 32).modes == 32
