import pytest
from hypothesis import given, settings, strategies as st

from qcurrents.currents import (antipode_current, check_defining_relations, check_ope,
                                coproduct_current, counit_value, frenkel_jing, make_field,
                                product_mode, stated_ope)
from qcurrents.fock import FockVector, basis_enumerate
from qcurrents.vertexcalc import contract, is_identity, normal_compose, predicted_product

F = make_field(0)
K = 10
OPS = {lab: frenkel_jing(lab, F, K) for lab in ("x+", "x-", "phi", "psi")}
STATES = basis_enumerate(0, [0], 2) + basis_enumerate(0, [1], 2)


def test_relations_level_one_small():
    for sector in (0, 1):
        rep = check_defining_relations(0, [sector], 2, 1)
        assert rep.passed, rep.failures[:3]
        assert rep.assertions > 100


def test_relations_tensor_square_small():
    rep = check_defining_relations(1, [0, 0], 1, 1)
    assert rep.passed, rep.failures[:3]
    assert rep.notes["central_charge"] == 2


def test_other_delta_parse_fails():
    rep = check_defining_relations(0, [0], 1, 1, delta_parse="a", relations=["x+x-"])
    assert rep.status == "fail"
    assert all(f.location.startswith("x+x-") for f in rep.failures)


def test_bad_delta_parse_rejected():
    with pytest.raises(ValueError):
        check_defining_relations(0, [0], 1, 1, delta_parse="c")


def test_ope_closed_forms():
    want = stated_ope(F, K)
    for pair, S in want.items():
        got = contract(OPS[pair[0]], OPS[pair[1]])
        assert got.is_closed()
        assert got.same_function(S)[0], (pair, got.to_str())


def test_ope_stated_reading_fails_on_two_forms():
    rep = check_ope(N=0, W=1, reading="stated")
    bad = sorted({f.location for f in rep.failures})
    assert bad == ["closed form psi x-", "closed form x+ phi"]


def test_ope_small_window():
    rep = check_ope(N=1, W=1)
    assert rep.passed and rep.assertions > 0


@given(st.sampled_from(sorted(OPS)), st.sampled_from(sorted(OPS)), st.sampled_from(STATES),
       st.integers(-2, 2), st.integers(-2, 2))
@settings(max_examples=40, deadline=None)
def test_mode_product_oracle(a, b, state, r, s):
    """Raw ``A_r B_s`` agrees with contraction times normal-ordered pair."""
    A, B = OPS[a], OPS[b]
    v = FockVector.basis(F, state)
    lhs = product_mode(A, B, r, s, v)
    rhs = predicted_product(A, B, r, s, state)
    assert set(lhs.terms) == set(rhs.terms)
    assert all(F.equal(lhs.coefficient(t), rhs.coefficient(t)) for t in lhs.terms)


def test_coproduct_current_has_one_term_per_slot():
    f = make_field(2)
    X = coproduct_current("+", 2, f, 4)
    assert len(X.terms) == 3


def test_antipode_of_cartan_inverts():
    assert is_identity(normal_compose(OPS["phi"], antipode_current("phi", F, K)))
    assert is_identity(normal_compose(OPS["psi"], antipode_current("psi", F, K)))


def test_counit():
    assert F.is_zero(counit_value("x+", F))
    assert F.equal(counit_value("phi", F), F.one())
