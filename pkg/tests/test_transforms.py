import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as npcheb
from scipy.integrate import quad
from scipy.special import eval_hermite, gammaln

from fs_spectral.errors import LengthMismatch, ModeMismatch, PointOutOfDomain
from fs_spectral.problems import build
from fs_spectral.sequences import CompactEnvelope
from fs_spectral.transforms import (
    CRAMER,
    BasisMap,
    chebyshev_analyze,
    chebyshev_synthesize,
    dab_analyze,
    fourier_analyze,
    fourier_pack,
    fourier_unpack,
    hermite_analyze,
    hermite_derivative_coeffs,
    hermite_eval,
    hermite_matrix,
    hermite_synthesize,
    pullback,
    sine_synthesize,
    weierstrass_tail,
)

SQRT_2PI = math.sqrt(2 * math.pi)
ALL_MAPS = [
    BasisMap.sine(32),
    BasisMap.fourier(32),
    BasisMap.hermite(32),
    BasisMap.chebyshev(32, 0.0, 1.0),
    BasisMap.dab(32, -1.0, 1.0),
]


def hermite_reference(k, t):
    # physicists' polynomial times the normalisation, in log space for the constant
    log_norm = -0.5 * (k * math.log(2.0) + gammaln(k + 1) + 0.5 * math.log(math.pi))
    return eval_hermite(k, t) * np.exp(log_norm - 0.5 * np.asarray(t) ** 2)


def bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def test_hermite_values():
    assert hermite_eval(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert hermite_eval(1, 0.0) == 0.0
    t = np.linspace(-6, 6, 97)
    for k in (0, 1, 5, 17, 30):
        assert np.allclose(hermite_eval(k, t), hermite_reference(k, t), rtol=1e-10, atol=1e-13)


def test_hermite_recurrence_survives_far_tails():
    H = hermite_matrix(400, np.array([0.0, 25.0, 45.0]))
    assert np.all(np.isfinite(H))
    # beyond the turning point sqrt(2k+1) the functions are tiny but not garbage
    assert 0 < abs(H[399, 1]) <= CRAMER * math.pi ** -0.25


def test_cramer_bound():
    t = np.linspace(-25, 25, 5001)
    assert np.abs(hermite_matrix(150, t)).max() <= CRAMER * math.pi ** -0.25


def test_hermite_orthonormality_by_independent_quadrature():
    for j, k in [(0, 0), (3, 3), (2, 5), (31, 31), (30, 31)]:
        val, _ = quad(lambda t: hermite_reference(j, t) * hermite_reference(k, t), -20, 20, limit=400)
        assert val == pytest.approx(float(j == k), abs=1e-10)


def test_hermite_analyze_examples():
    assert np.allclose(hermite_analyze(lambda t: hermite_eval(0, t), 8).entries, np.eye(8)[0], atol=1e-12)
    f = lambda t: hermite_eval(0, t) + 2 * hermite_eval(3, t)
    assert np.allclose(hermite_analyze(f, 8).entries, [1, 0, 0, 2, 0, 0, 0, 0], atol=1e-12)


def test_hermite_analyze_gaussian_against_dense_quadrature():
    x = hermite_analyze(lambda t: np.exp(-t * t), 16).entries
    for k in range(16):
        val, _ = quad(lambda t: np.exp(-t * t) * hermite_reference(k, t), -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13)
        assert x[k] == pytest.approx(val, abs=1e-10)


def test_hermite_derivative_ladder():
    rng = np.random.default_rng(7)
    x = rng.normal(size=10)
    t = np.linspace(-3, 3, 13)
    h = 1e-5
    fd = (hermite_synthesize(x, t + h) - hermite_synthesize(x, t - h)) / (2 * h)
    assert np.allclose(hermite_synthesize(x, t, 1), fd, atol=1e-8)
    assert hermite_derivative_coeffs(x).size == 11


def test_fourier_pack_examples():
    assert fourier_pack(0.0, [1.0], [0.0]).entries.tolist() == [0.0, 1.0, 0.0]
    x = fourier_pack(0.0, [0.0, 0.0], [0.0, 1.0]).entries
    assert x[4] == 1.0 and np.count_nonzero(x) == 1
    assert not fourier_pack(0.0, np.zeros(3), np.zeros(3)).entries.any()
    with pytest.raises(LengthMismatch):
        fourier_pack(0.0, [1.0], [])
    a0, a, b = fourier_unpack([1.0, 2.0, 3.0, 4.0])
    assert (a0, a.tolist(), b.tolist()) == (1.0, [2.0, 4.0], [3.0, 0.0])


def test_fourier_analyze_cos():
    x = fourier_analyze(np.cos, 9).entries
    assert np.allclose(x, np.eye(9)[1], atol=1e-14)
    y = fourier_analyze(lambda t: 3.0 + np.sin(2 * t), 9).entries
    assert np.allclose(y, 6.0 * np.eye(9)[0] + np.eye(9)[4], atol=1e-14)


def test_chebyshev_synthesize_examples():
    assert chebyshev_synthesize([1.0], 0.3) == pytest.approx(SQRT_2PI)
    assert chebyshev_synthesize([0.0, 1.0], 1.0) == pytest.approx(SQRT_2PI)
    assert chebyshev_synthesize([0.0, 0.0, 1.0], 0.0) == pytest.approx(-SQRT_2PI)
    with pytest.raises(PointOutOfDomain):
        chebyshev_synthesize([1.0], 1.5)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.floats(-1, 1))
def test_clenshaw_matches_numpy(x, y):
    assert chebyshev_synthesize(x, y) == pytest.approx(SQRT_2PI * npcheb.chebval(y, x), abs=1e-11)


def test_chebyshev_analyze_examples():
    assert np.allclose(chebyshev_analyze(lambda y: SQRT_2PI + 0 * y, -1, 1, 6).entries, np.eye(6)[0], atol=1e-15)
    assert np.allclose(chebyshev_analyze(lambda y: SQRT_2PI * y, -1, 1, 6).entries, np.eye(6)[1], atol=1e-15)
    x = chebyshev_analyze(np.exp, 0.0, 1.0, 32)
    t = np.linspace(0, 1, 100)
    assert np.max(np.abs(BasisMap.chebyshev(32, 0, 1).synthesize(x, t) - np.exp(t))) <= 1e-10


def test_chebyshev_scaling_cancels():
    L = BasisMap.chebyshev(16)
    for k in range(16):
        e = np.eye(16)[k]
        assert np.max(np.abs(L.analyze(L.function(e)).entries - e)) <= 1e-14


def test_dab_examples():
    assert not dab_analyze(lambda t: 0 * t, -1, 1, 8).entries.any()
    x = dab_analyze(bump, -1.0, 1.0, 16).entries
    assert np.allclose(dab_analyze(lambda t: 2 * bump(t), -1.0, 1.0, 16).entries, 2 * x, rtol=0, atol=1e-12)


def test_dab_bump_against_quadrature_in_t():
    # x_k = int_{-1}^{1} bump(t) H_{k-1}(eta(t)) eta'(t) dt with eta = tan(pi t / 2)
    x = dab_analyze(bump, -1.0, 1.0, 12).entries
    for k in range(12):
        def integrand(t):
            eta = math.tan(0.5 * math.pi * t)
            return float(bump(np.array([t]))[0] * hermite_reference(k, eta) * 0.5 * math.pi / math.cos(0.5 * math.pi * t) ** 2)

        val, _ = quad(integrand, -1, 1, limit=400, epsabs=1e-13)
        assert x[k] == pytest.approx(val, abs=1e-8)


def test_dab_bump_stable_under_node_doubling():
    L = BasisMap.dab(32)
    x, q = L.analyze_nodes(bump)
    y = BasisMap.dab(32, nodes=2 * q).analyze(bump)
    assert np.max(np.abs(x.entries - y.entries)) <= 1e-8


def test_sine_synthesize_examples():
    s = math.sqrt(2 / math.pi)
    assert sine_synthesize([1.0], [math.pi / 2]).values[0] == pytest.approx(s)
    assert sine_synthesize([1.0], [0.0], m=1).values[0] == pytest.approx(s)
    assert sine_synthesize([0.0, 1.0], [math.pi / 2]).values[0] == pytest.approx(0.0, abs=1e-15)


def test_sine_derivatives_match_finite_differences():
    rng = np.random.default_rng(3)
    x = rng.normal(size=8) / np.arange(1, 9) ** 3
    t = np.linspace(0.1, 3.0, 7)
    h = 1e-5
    for m in range(3):
        fd = (sine_synthesize(x, t + h, m).values - sine_synthesize(x, t - h, m).values) / (2 * h)
        assert np.allclose(sine_synthesize(x, t, m + 1).values, fd, atol=1e-7)


def test_weierstrass_tail_against_explicit_tail():
    # x_n = 2^{-n}: the true tail sup is at most sqrt(2/pi) sum_{n>N} n^m 2^{-n}
    N, m = 20, 2
    n_all = np.arange(1, 400, dtype=float)
    x = 2.0 ** -n_all
    from fs_spectral.generators import ParamSequence

    env = CompactEnvelope(ParamSequence({"gen": "exp", "M": 1.0, "rho": math.log(2.0)}))
    bound, k, C = weierstrass_tail(x[:N], m, math.sqrt(2 / math.pi), env, extend=20)
    exact = math.sqrt(2 / math.pi) * float(np.sum(n_all[N:] ** m * x[N:]))
    assert exact <= bound <= 1e3 * exact
    assert weierstrass_tail(np.zeros(5), 0, 1.0)[0] == 0.0


@pytest.mark.parametrize("L", ALL_MAPS, ids=lambda L: L.kind)
def test_round_trip(L, rng):
    for _ in range(3):
        x = rng.normal(size=L.N)
        y = L.analyze(L.function(x)).entries
        assert np.max(np.abs(y - x)) <= 1e-10


@pytest.mark.parametrize("L", [BasisMap.sine(32), BasisMap.hermite(32)], ids=lambda L: L.kind)
def test_gram_identity(L):
    assert np.max(np.abs(L.gram() - np.eye(32))) <= 1e-10


@pytest.mark.parametrize("L", ALL_MAPS, ids=lambda L: L.kind)
def test_linearity(L):
    f = lambda t: np.exp(-np.asarray(t) ** 2) * np.sin(3 * np.asarray(t))
    g = bump if L.kind == "dab-chain" else (lambda t: np.cos(np.asarray(t)) ** 3)
    lhs = L.analyze(lambda t: 2.0 * f(t) - 0.5 * g(t)).entries
    rhs = 2.0 * L.analyze(f).entries - 0.5 * L.analyze(g).entries
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_basis_parse_and_mismatch():
    assert BasisMap.parse("chebyshev:0,2", 8).domain == (0.0, 2.0)
    assert BasisMap.parse("dab", 8).kind == "dab-chain"
    with pytest.raises(ValueError):
        BasisMap.parse("wavelet", 8)
    with pytest.raises(ModeMismatch):
        BasisMap.sine(4).synthesize(np.ones(5), [0.0])


def test_pullback_identities(rng):
    F = build("p1", 16).functional
    L = BasisMap.sine(16)
    G = pullback(F, L)
    K = CompactEnvelope()
    assert G.value(lambda t: 0 * t) == pytest.approx(F(np.zeros(16)), abs=1e-15)
    for _ in range(5):
        x, h = K.sample(16, rng), K.sample(16, rng)
        assert G(L.function(x)) == pytest.approx(F(x), abs=1e-10)
        from fs_spectral.functional import directional

        assert G.derivative(L.function(x), L.function(h)) == pytest.approx(directional(F, x, h), abs=1e-10)
    with pytest.raises(ModeMismatch):
        pullback(F, BasisMap.sine(8))
