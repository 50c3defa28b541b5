from fractions import Fraction
from math import gcd

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmvlab.contfrac import Frequency, ThetaAffine, cf_expand, convergents, working_precision
from cmvlab.errors import DomainError, PrecisionExhausted


def _mp_cf(x, n):
    # plain Euclid on a 400-bit mpmath value
    out = []
    with mpmath.workprec(400):
        x = mpmath.mpf(x)
        for _ in range(n):
            x = 1 / x
            a = int(mpmath.floor(x))
            out.append(a)
            x -= a
    return out


def test_golden_six_terms():
    assert cf_expand(Frequency.golden(), 6) == [1] * 6


def test_sqrt2_minus_one_reconstructs():
    with mpmath.workprec(300):
        theta = mpmath.sqrt(2) - 1
        a = cf_expand(Frequency.coerce(theta), 5)
        assert a == [2] * 5
        c = convergents(a)
        assert abs(theta - mpmath.mpf(c.p[5]) / c.q[5]) < mpmath.mpf(1) / c.q[5] ** 2


def test_rational_terminates():
    a = cf_expand(Fraction(1, 4), 3)
    assert a == [4]
    assert a.terminated
    assert cf_expand("0.25", 2).terminated
    assert not cf_expand("0.25", 1).terminated


def test_symbolic_modes_match_mpmath():
    with mpmath.workprec(400):
        golden = (mpmath.sqrt(5) - 1) / 2
        silver = mpmath.sqrt(2) - 1
    assert cf_expand("golden", 40) == _mp_cf(golden, 40)
    assert cf_expand("silver", 40) == _mp_cf(silver, 40)
    assert Frequency.coerce("cf:1,2").cf(7) == [1, 2, 1, 2, 1, 2, 1]


def test_inexact_input_runs_out_of_precision():
    with mpmath.workprec(256):
        theta = Frequency.coerce(mpmath.sqrt(2) - 1)
    assert cf_expand(theta, 60) == [2] * 60
    with pytest.raises(PrecisionExhausted):
        cf_expand(theta, 400)


def test_domain_errors():
    with pytest.raises(DomainError):
        Frequency.coerce(1.5)
    with pytest.raises(DomainError):
        Frequency.coerce("0")
    with pytest.raises(DomainError):
        convergents([1, 0, 2])


@pytest.mark.parametrize("cf, p, q", [
    ([1, 1, 1, 1], [0, 1, 1, 2, 3], [1, 1, 2, 3, 5]),
    ([2, 2], [0, 1, 2], [1, 2, 5]),
    ([7], [0, 1], [1, 7]),
])
def test_convergent_examples(cf, p, q):
    c = convergents(cf)
    assert c.p == p and c.q == q


@given(st.lists(st.integers(1, 50), min_size=1, max_size=40))
def test_convergent_identities(cf):
    c = convergents(cf)
    for n in range(1, len(cf) + 1):
        assert gcd(c.p[n], c.q[n]) == 1
        assert abs(c.p[n] * c.q[n - 1] - c.p[n - 1] * c.q[n]) == 1
    # the finite continued fraction value, evaluated from the tail
    x = Fraction(0)
    for a in reversed(cf):
        x = 1 / (a + x)
    assert x == c.ratio(len(cf))


@given(st.lists(st.integers(1, 9), min_size=3, max_size=12))
def test_periodic_frequency_error_bound(pattern):
    freq = Frequency.from_cf(pattern)
    a = freq.cf(30)
    c = convergents(a)
    for n in range(1, 29):
        assert abs(freq.approx - c.ratio(n)) < Fraction(1, c.q[n] * c.q[n + 1])


def test_precision_env(monkeypatch):
    monkeypatch.setenv("CMVLAB_PRECISION", "512")
    assert working_precision() == 512
    monkeypatch.setenv("CMVLAB_PRECISION", "16")
    with pytest.raises(DomainError):
        working_precision()


def test_floor_affine_guard():
    freq = Frequency.golden()
    # floor(k theta + c) for small k, checked against mpmath
    with mpmath.workprec(200):
        th = (mpmath.sqrt(5) - 1) / 2
        for k in range(-30, 31):
            assert freq.floor_affine(k, Fraction(1, 3)) == int(mpmath.floor(k * th + mpmath.mpf(1) / 3))
    # exact zero is not decidable for an irrational approximation
    with pytest.raises(PrecisionExhausted):
        Frequency.coerce(mpmath.mpf("0.5")).floor_affine(2, 0)
    assert ThetaAffine(2, Fraction(1, 2)).value(freq) == pytest.approx(2 * float(freq) + 0.5)
