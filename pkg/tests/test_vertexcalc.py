from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qcurrents.currents import frenkel_jing, make_field
from qcurrents.scalar import numeric_eval
from qcurrents.vertexcalc import (FFVO, PoleAtSpecialization, ScalarSeries, ZeroOperator,
                                  contract, ffvo_equal, is_identity, is_zero_operator,
                                  normal_compose, normal_quotient, spaced_product)

F = make_field(0)
K = 8
OPS = {lab: frenkel_jing(lab, F, K) for lab in ("x+", "x-", "phi", "psi")}
labels = st.sampled_from(sorted(OPS))
halves = st.integers(-6, 6).map(lambda n: Fraction(n, 2))


def test_xplus_self_contraction():
    S = contract(OPS["x+"], OPS["x+"])
    assert S.is_closed()
    assert S.zpow == 2 and S.wpow == 0
    assert sorted(S.closed) == [(-2, 1), (0, 1)]
    assert S.to_str() == "z^2 * (1 - q^-2 x) * (1 - x)  [x = w/z]"


def test_xminus_self_contraction():
    S = contract(OPS["x-"], OPS["x-"])
    assert sorted(S.closed) == [(0, 1), (2, 1)] and S.zpow == 2


def test_cartan_pair_is_trivial_in_one_order():
    assert contract(OPS["phi"], OPS["psi"]).is_trivial()
    assert not contract(OPS["psi"], OPS["phi"]).is_trivial()


def test_adjacent_raising_product_vanishes():
    out = spaced_product([OPS["x+"], OPS["x+"]], [0, 2])
    assert is_zero_operator(out)
    assert isinstance(spaced_product([OPS["x+"], OPS["x+"]], [0, 0]), ZeroOperator)


def test_pole_is_reported():
    with pytest.raises(PoleAtSpecialization):
        spaced_product([OPS["x+"], OPS["x-"]], [0, 1])


def test_identity_dump():
    ident = FFVO.identity(F, 1, 4)
    assert is_identity(ident)
    assert not ident.has_tails()


@given(labels)
def test_inverse_cancels(lab):
    A = OPS[lab]
    assert is_identity(normal_compose(A, A.normal_inverse()))
    assert ffvo_equal(A.normal_inverse().normal_inverse(), A).passed


@given(labels, labels)
def test_quotient_undoes_compose(a, b):
    A, B = OPS[a], OPS[b]
    assert ffvo_equal(normal_quotient(normal_compose(A, B), B), A).passed


@given(labels, halves, halves)
@settings(deadline=None)
def test_rescale_composes(lab, a, b):
    A = OPS[lab]
    assert ffvo_equal(A.rescale(a).rescale(b), A.rescale(a + b)).passed


@given(labels, labels)
@settings(deadline=None)
def test_contraction_reversal(a, b):
    """Swapped contraction is the ordinary one with arguments renamed."""
    A, B = OPS[a], OPS[b]
    ok, detail = contract(A, B, swap=True).same_function(contract(A, B).swap_variables())
    assert ok, detail


@given(labels, labels)
@settings(deadline=None)
def test_reorientation_round_trip(a, b):
    S = contract(OPS[a], OPS[b])
    if not S.is_closed():
        return
    other = "z/w" if S.orientation == "w/z" else "w/z"
    T = S.reoriented(other)
    assert T.orientation == other
    assert S.same_function(T)[0]
    assert S.same_function(T.reoriented(S.orientation))[0]


@given(labels, labels, halves, halves)
@settings(deadline=None)
def test_series_rescale_composes(a, b, u, v):
    S = contract(OPS[a], OPS[b])
    assert S.rescale(u, v).rescale(v, u).same_function(S.rescale(u + v, u + v))[0]


@given(labels, labels)
@settings(deadline=None)
def test_series_times_inverse_is_one(a, b):
    S = contract(OPS[a], OPS[b])
    assert (S * S.inverse()).is_trivial()
    assert (S / S).same_function(ScalarSeries.one(F, S.K, S.orientation))[0]


def test_linear_factor_reads_both_ways():
    lhs = ScalarSeries.linear(F, K, 0, 2, "w/z")
    rhs = ScalarSeries.linear(F, K, 2, 0, "z/w")
    # q^0 z - q^2 w and q^2 z - q^0 w differ; the z/w form with roles swapped agrees
    assert not lhs.same_function(rhs)[0]
    assert lhs.same_function(ScalarSeries.linear(F, K, 0, 2, "w/z").reoriented("z/w"))[0]


def test_numeric_conversion_preserves_tails():
    N = make_field(0, "numeric")
    A = OPS["x+"].to_field(N)
    for k in range(K):
        assert abs(A.creation[0][k] - numeric_eval(OPS["x+"].creation[0][k])) < 1e-12
