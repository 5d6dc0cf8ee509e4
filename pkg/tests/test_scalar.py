import cmath
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qcurrents.scalar import (DEFAULT_Q, ExactField, FieldParams, NonRepresentableExponent,
                              NumericField, PoleAtSample, exp_series, g_series, log_series,
                              numeric_eval, qint)

F3 = ExactField(FieldParams.for_level(2))  # D = 6, L = 3
N3 = NumericField(FieldParams.for_level(2))


@st.composite
def scalars(draw, field=F3):
    """Small sums of c * zeta^j * q^(e/D), occasionally divided by a q-integer."""
    x = field.zero()
    for _ in range(draw(st.integers(1, 3))):
        c = Fraction(draw(st.integers(-4, 4)), draw(st.integers(1, 3)))
        e = Fraction(draw(st.integers(-12, 12)), field.params.D)
        x = x + field.qpow(e) * field.zeta(draw(st.integers(0, 5))) * c
    if draw(st.booleans()):
        x = x / field.qint(draw(st.integers(1, 4)))
    return x


def test_qint_small_values():
    f = ExactField(FieldParams())
    assert f.equal(qint(1, f), f.one())
    assert f.equal(qint(2, f), f.qpow(1) + f.qpow(-1))
    assert f.equal(qint(3, f), f.qpow(2) + f.one() + f.qpow(-2))
    assert f.equal(qint(-2, f), -qint(2, f))


def test_fractional_powers_need_root():
    f = ExactField(FieldParams(2, 1))
    assert f.equal(f.qpow(Fraction(1, 2)) * f.qpow(Fraction(1, 2)), f.qpow(1))
    with pytest.raises(NonRepresentableExponent):
        f.qpow(Fraction(1, 3))


def test_zeta_is_primitive_root():
    assert F3.equal(F3.zeta(3), F3.one())
    assert not F3.equal(F3.zeta(1), F3.one())
    assert F3.is_zero(F3.one() + F3.zeta(1) + F3.zeta(2))


def test_numeric_matches_exact_on_qint():
    for k in range(1, 6):
        assert abs(numeric_eval(F3.qint(k)) - N3.qint(k)) < 1e-12


def test_numeric_zeta_value():
    assert abs(N3.zeta(1) - cmath.exp(2j * cmath.pi / 3)) < 1e-14


def test_pole_at_sample():
    with pytest.raises(PoleAtSample):
        numeric_eval(F3.one(), 0)


def test_g_series_coefficients():
    f = ExactField(FieldParams())
    g = g_series(3, f)
    assert f.equal(g.coeffs[0], f.qpow(-2))
    assert f.equal(g.coeffs[1], f.qpow(-4) - f.one())
    assert f.equal(g.coeffs[2], f.qpow(-6) - f.qpow(-2))


@given(scalars(), scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_ring_laws(a, b, c):
    assert F3.equal((a + b) + c, a + (b + c))
    assert F3.equal((a * b) * c, a * (b * c))
    assert F3.equal(a * (b + c), a * b + a * c)
    assert F3.equal(a * b, b * a)


@given(scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_division_inverts_multiplication(a, b):
    if F3.is_zero(b):
        return
    assert F3.equal(a * b / b, a)


@given(scalars())
@settings(max_examples=40, deadline=None)
def test_equality_is_syntactic(a):
    b = (a * F3.qint(3) + F3.one()) / F3.qint(3) - F3.one() / F3.qint(3)
    assert a == b
    assert hash(a) == hash(b)


@given(scalars(), scalars())
@settings(max_examples=40, deadline=None)
def test_evaluation_is_a_homomorphism(a, b):
    x, y = numeric_eval(a), numeric_eval(b)
    assert abs(numeric_eval(a * b) - x * y) <= 1e-9 * max(1, abs(x * y))
    assert abs(numeric_eval(a + b) - (x + y)) <= 1e-9 * max(1, abs(x + y))


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=5))
@settings(max_examples=40, deadline=None)
def test_log_inverts_exp(ints):
    f = ExactField(FieldParams())
    gam = [f.qpow(n) * (k + 1) for k, n in enumerate(ints)]
    back = log_series(exp_series(gam, f, len(gam)), f)
    assert all(f.equal(u, v) for u, v in zip(back, gam))


def test_default_sample():
    assert DEFAULT_Q == complex(0.7303, 0.1159)
