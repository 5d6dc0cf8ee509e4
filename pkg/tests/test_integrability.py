from fractions import Fraction

import pytest

from qcurrents.integrability import (check_collapse, check_diff_eq_fused, check_diff_eq_single,
                                     check_pole_structure, check_vanishing, collapse_product,
                                     compare_closed_form, fused_commutator, fused_spacings)


def test_spacings():
    assert fused_spacings("+", 2) == [0, 2, 4]
    assert fused_spacings("-", 2) == [4, 2, 0]


@pytest.mark.parametrize("m", [0, 1, 2])
def test_collapse_keeps_one_descending_term(m):
    for sign in "+-":
        fc = collapse_product(sign, m)
        assert fc.vanished == (m + 1) ** (m + 1) - 1
        assert fc.survivor == tuple(range(m + 1, 0, -1))
    assert check_collapse(m).passed


@pytest.mark.parametrize("sign", "+-")
def test_single_difference_equation(sign):
    rep = check_diff_eq_single(sign, N=2, W=1)
    assert rep.passed, rep.failures[:3]


@pytest.mark.parametrize("sign", "+-")
def test_fused_difference_equation_level_two(sign):
    rep = check_diff_eq_fused(sign, 1, N=1, W=1)
    assert rep.passed, rep.failures[:3]


def test_compact_lowering_arguments_disagree_with_slotwise():
    notes = check_diff_eq_fused("-", 1, N=0, W=0).notes["compact_form"]
    assert notes["left"]["stated_matches_slotwise"] is False
    assert Fraction(notes["left"]["consistent_argument"]) == Fraction(3)
    assert Fraction(notes["right"]["consistent_argument"]) == Fraction(1)


def test_closed_form_raising_matches():
    out = compare_closed_form("+", 1)
    assert all(out[k] for k in ("creation", "annihilation", "qgrade", "prefactor"))


def test_closed_form_lowering_mismatch_is_reported():
    out = compare_closed_form("-", 1)
    assert out["annihilation"] and out["qgrade"]
    assert not out["creation"] and not out["prefactor"]


@pytest.mark.parametrize("m", [0, 1, 2])
def test_fused_heisenberg_commutator(m):
    for n in (1, 2, 3):
        got, want = fused_commutator(m, n)
        assert got == want


def test_pole_structure_tensor_square():
    rep = check_pole_structure(1, N=2, window=2, sign="+")
    assert rep.passed and rep.assertions > 100


def test_pole_structure_needs_clearing():
    assert check_pole_structure(1, N=1, window=1, sign="+", clearing=None).status == "fail"


@pytest.mark.parametrize("m", [0, 1])
def test_vanishing(m):
    for sign in "+-":
        assert check_vanishing(m, N=1, sign=sign, W=1).passed
