import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyfdr.tonemap import KINDS, ToneMapper, nonlinearity_error

ALL = [ToneMapper(k) for k in KINDS]


def grid():
    return np.logspace(-4, 15 * np.log10(2), 1000)


@pytest.mark.parametrize("tm", ALL, ids=KINDS)
def test_round_trip(tm):
    x = grid()
    np.testing.assert_allclose(tm.invert(tm.apply(x)), x, rtol=1e-6)


@pytest.mark.parametrize("tm", ALL, ids=KINDS)
def test_monotone(tm, rng):
    x = np.sort(rng.uniform(0, 2.0 ** 15, 20_000))
    x = np.unique(x)
    y = tm.apply(x)
    d = np.diff(y)
    if tm.increasing:
        assert np.all(d > 0)
    else:
        assert np.all(d < 0)


def test_examples():
    assert ToneMapper("power_law").apply(1.0) == 1.0
    assert ToneMapper("mu_law_log2", mu=123.0).apply(0.0) == 0.0
    ref = float(mpmath.mpf("0.5") ** (1 / mpmath.mpf("2.2")))
    assert ToneMapper("power_law").apply(0.5) == pytest.approx(ref, rel=1e-14)
    assert ref == pytest.approx(0.72974, abs=5e-6)
    assert ToneMapper().invert(3.5) == 3.5
    assert ToneMapper("power_law").invert(1.0) == 1.0
    mu = ToneMapper("mu_law_log2")
    assert mu.invert(mu.apply(7.3)) == pytest.approx(7.3, rel=1e-12)


@pytest.mark.parametrize("kind,x", [("log_n", 3.0), ("natural_log", 3.0), ("mu_law_log2", 3.0),
                                    ("inverted", 3.0)])
def test_against_mpmath(kind, x):
    tm = ToneMapper(kind)
    X = mpmath.mpf(x)
    ref = {
        "log_n": lambda: mpmath.log(X + 1, 10),
        "natural_log": lambda: mpmath.log(X + mpmath.mpf("1e-6")),
        "mu_law_log2": lambda: mpmath.log(mpmath.log(1 + 5000 * X) / mpmath.log(5001) + 1, 2),
        "inverted": lambda: 1 / (1 + X + mpmath.mpf("0.01")),
    }[kind]()
    assert float(tm.apply(x)) == pytest.approx(float(ref), rel=1e-14)


def test_negative_input_rejected():
    for tm in ALL:
        with pytest.raises(ValueError):
            tm.apply(-1.0)


def test_inverted_range_checked():
    tm = ToneMapper("inverted")
    with pytest.raises(ValueError):
        tm.invert(0.0)
    with pytest.raises(ValueError):
        tm.invert(1.0)


def test_natural_log_inverse_clamps():
    tm = ToneMapper("natural_log")
    assert tm.invert(-100.0) == 0.0


@pytest.mark.parametrize("kw", [dict(gamma=0), dict(n=1), dict(mu=0), dict(epsilon=0)])
def test_parameter_validation(kw):
    with pytest.raises(ValueError):
        ToneMapper("identity", **kw)


@pytest.mark.parametrize("text,tm", [
    ("identity", ToneMapper()),
    ("gamma:2.2", ToneMapper("power_law", gamma=2.2)),
    ("logn:10", ToneMapper("log_n", n=10.0)),
    ("ln:1,0,1e-6", ToneMapper("natural_log")),
    ("mulog2:5000", ToneMapper("mu_law_log2")),
    ("inverted", ToneMapper("inverted")),
])
def test_parse(text, tm):
    assert ToneMapper.parse(text) == tm


@pytest.mark.parametrize("text", ["", "gamma", "gamma:x", "ln:1,2", "identity:3", "sqrt",
                                  "gamma:-1"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        ToneMapper.parse(text)


@settings(max_examples=100)
@given(st.sampled_from(["power_law", "log_n", "mu_law_log2", "natural_log"]),
       st.floats(1.01, 1e4, allow_nan=False))
def test_spec_round_trip(kind, p):
    field = {"power_law": "gamma", "log_n": "n", "mu_law_log2": "mu", "natural_log": "alpha"}[kind]
    tm = ToneMapper(kind, **{field: p})
    assert ToneMapper.parse(tm.spec()) == tm


class TestNonlinearity:
    def test_identity(self):
        for x in (0.5, 3.0, 1e4):
            assert nonlinearity_error(ToneMapper(), x) == pytest.approx(0.01)

    def test_zero_delta(self):
        assert nonlinearity_error(ToneMapper("power_law"), 1.0, 0.0) == 0.0

    def test_mu_law_grows(self):
        tm = ToneMapper("mu_law_log2")
        xs = 2.0 ** np.arange(16)
        err = nonlinearity_error(tm, xs)
        assert np.all(np.diff(err) >= 0)
        assert err[14] > 0.01

    @pytest.mark.parametrize("kind", ["log_n", "natural_log", "power_law"])
    def test_log_family_non_decreasing(self, kind):
        err = nonlinearity_error(ToneMapper(kind), 2.0 ** np.arange(16))
        assert np.all(np.diff(err) >= 0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            nonlinearity_error(ToneMapper(), 0.001, 0.01)
