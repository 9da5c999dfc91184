import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fs_spectral.errors import EmptySequence, ModeMismatch
from fs_spectral.generators import ParamSequence
from fs_spectral.sequences import (
    CompactEnvelope,
    TruncatedSequence,
    csum,
    decay_fit,
    dual_seminorm_t,
    load_sequence,
    read_sequence_csv,
    seminorm_s,
    weighted_profile,
    write_sequence_csv,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_seminorm_examples():
    x = [1.0, -0.5, 0.25]
    assert seminorm_s(x, 0) == 1.0
    assert seminorm_s(x, 1) == 1.0
    assert seminorm_s(x, 2) == 2.25
    with pytest.raises(EmptySequence):
        seminorm_s([], 0)
    with pytest.raises(ValueError):
        seminorm_s(x, -1)


@given(st.lists(finite, min_size=1, max_size=8), st.integers(0, 4))
def test_seminorm_monotone_in_k(x, k):
    assert seminorm_s(x, k) <= seminorm_s(x, k + 1)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=7))
def test_dual_seminorm_matches_vertex_enumeration(g):
    # the sup of a linear form over a box is attained at a vertex
    K = CompactEnvelope.exponential(2.0, 0.5)
    c = K.values(len(g))
    brute = max(abs(sum(gi * s * ci for gi, s, ci in zip(g, signs, c))) for signs in itertools.product((-1, 1), repeat=len(g)))
    assert dual_seminorm_t(g, K) == pytest.approx(brute, rel=1e-12, abs=1e-300)


def test_dual_seminorm_rejects_nonfinite():
    with pytest.raises(ValueError):
        dual_seminorm_t([1.0, math.inf], CompactEnvelope())


@given(st.lists(finite, min_size=1, max_size=50), st.randoms(use_true_random=False))
def test_csum_is_order_independent(values, r):
    shuffled = list(values)
    r.shuffle(shuffled)
    assert csum(values) == csum(shuffled)


def test_csum_is_exact_on_cancellation():
    assert csum([1e16, 1.0, -1e16]) == 1.0


def test_decay_fit_flags_polynomial_sequence():
    n = np.arange(1, 65, dtype=float)
    table = decay_fit(1.0 / n**2, 4)
    assert [e.growing for e in table.estimates] == [False, False, False, True, True]
    assert table.constant(2) == pytest.approx(1.0)


def test_decay_fit_accepts_exponential_decay():
    n = np.arange(1, 65, dtype=float)
    table = decay_fit(np.exp(-n), 6)
    assert not table.any_growth
    # max_n n^k e^{-n} sits at n = k
    assert table.constant(3) == pytest.approx(27 * math.exp(-3))


def test_weighted_profile_large_k_does_not_overflow():
    x = np.full(10, 1e-300)
    assert np.all(np.isfinite(weighted_profile(x, 200)[:3]))


def test_truncated_sequence_claims():
    x = TruncatedSequence([1.0, 0.25, 1 / 9], ((2, 1.0),))
    assert x.decay_claims == ((2, 1.0),)
    with pytest.raises(ValueError):
        TruncatedSequence([1.0, 1.0], ((1, 1.0),))
    with pytest.raises(ValueError):
        TruncatedSequence([math.nan])


def test_truncated_sequence_arithmetic_and_padding():
    x = TruncatedSequence([1.0, 2.0])
    y = x + [0.5]
    assert y.entries.tolist() == [1.5, 2.0]
    assert (2 * x).entries.tolist() == [2.0, 4.0]
    assert (x - x).entries.tolist() == [0.0, 0.0]
    assert x.padded(4).tolist() == [1.0, 2.0, 0.0, 0.0]
    with pytest.raises(ModeMismatch):
        x.padded(1)
    assert TruncatedSequence.unit(2, 3).entries.tolist() == [0.0, 1.0, 0.0]
    with pytest.raises(ValueError):
        x.entries[0] = 5.0


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "x.csv"
    write_sequence_csv(path, values)
    assert read_sequence_csv(path).entries.tolist() == [float(v) for v in values]


def test_load_sequence_with_claims(tmp_path):
    write_sequence_csv(tmp_path / "x.csv", [0.5, 0.125])
    (tmp_path / "c.json").write_text('[{"k": 1, "C": 0.5}]')
    x = load_sequence(tmp_path / "x.csv", tmp_path / "c.json")
    assert x.decay_claims == ((1, 0.5),)


def test_envelope_validation_and_parse():
    K = CompactEnvelope.parse("exp:2,0.5")
    assert K.values(2) == pytest.approx([2 * math.exp(-0.5), 2 * math.exp(-1.0)])
    assert CompactEnvelope.zero().values(3).tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        CompactEnvelope(ParamSequence("inv-square"))
    with pytest.raises(ValueError):
        CompactEnvelope(ParamSequence.const(-1.0))


def test_envelope_samples_stay_in_box(rng):
    K = CompactEnvelope()
    x = K.sample(30, rng)
    assert np.all(np.abs(x.entries) <= K.values(30))


def test_generators():
    n = np.arange(1, 8)
    assert ParamSequence("inv-factorial").values(n).tolist() == [1 / math.factorial(k) for k in n]
    assert ParamSequence("inv-factorial-shift1").values(n).tolist() == [1 / math.factorial(k + 1) for k in n]
    assert ParamSequence("inv-factorial").values([500])[0] == 0.0
    assert ParamSequence("one-plus-inv-square-shift1").head(2).tolist() == [1.5, 1.2]
    e = ParamSequence.explicit([3.0, -4.0])
    assert e.head(4).tolist() == [3.0, -4.0, 0.0, 0.0]
    assert e.finite_support == 2
    assert e.scaled(0.5).absolute().head(2).tolist() == [1.5, 2.0]
    assert e.times(ParamSequence("inv-square")).head(2).tolist() == [3.0, -1.0]
    assert ParamSequence(e.spec) == e
    with pytest.raises(ValueError):
        ParamSequence("nope")
    with pytest.raises(ValueError):
        ParamSequence("inv-square").values([0])
