"""Parafermion constructions.

Several identities fail in the form they are usually written; those tests pin
the failure and the closed form the engine finds instead.
"""

from fractions import Fraction

import pytest

from qcurrents.cli import compare_backends
from qcurrents.currents import make_field
from qcurrents.parafermion import (VConventions, big_v, check_anticommutator, check_commutant,
                                   check_complementarity, check_coupling, check_exchange,
                                   check_factorization, check_fermions, check_like_sign_clause,
                                   check_multi_exchange, check_parafermion_commutator,
                                   check_same_index, check_survivor_counts, check_unity,
                                   contraction_pair, parafermion_component, slot_of)
from qcurrents.vertexcalc import contract

SHIFTED_V = VConventions(zconst=Fraction(1), prefactor_exp=Fraction(1, 2))


def test_slot_maps():
    assert [slot_of("-", 2, i) for i in (1, 2, 3)] == [3, 2, 1]
    assert [slot_of("-", 2, i, "slot") for i in (1, 2, 3)] == [1, 2, 3]
    assert [slot_of("+", 2, i) for i in (1, 2, 3)] == [1, 2, 3]


@pytest.mark.parametrize("m", [0, 1, 2])
def test_couplings(m):
    assert check_coupling(m, K=8).passed
    assert check_coupling(m, K=4, denominator="1").status == "fail"


@pytest.mark.parametrize("m", [1, 2])
def test_commutant(m):
    assert check_commutant(m, K=8).passed
    assert check_commutant(m, K=4, subject="V").status == "fail"
    assert check_commutant(m, K=4, conv=VConventions(flip_exponent=True)).status == "fail"


@pytest.mark.parametrize("m", [1, 2])
def test_factorization_and_survivors(m):
    assert check_factorization(m).passed
    assert check_survivor_counts(m).passed


def test_self_contractions():
    f = make_field(1)
    phi = parafermion_component("+", 1, 1, f, 6)
    V = big_v("+", 1, f, 6)
    assert contract(phi, phi).is_closed()
    assert not contract(V, V).is_trivial()


def test_contraction_pair_phase():
    P = contraction_pair(1, make_field(1), 6)
    assert P["p"].phase % 2 == 1  # zeta^-1 = -1 at level two


@pytest.mark.parametrize("m", [1, 2])
def test_unity_residual(m):
    rep = check_unity(m)
    assert rep.status == "fail"
    res = rep.notes["residual"]
    want = {1: ("q^3", "q^-1", "2"), 2: ("q^9", "q^-3", "3")}[m]
    assert (res["+"]["prefactor"], res["-"]["prefactor"], res["+"]["zconst"]) == want
    assert not res["+"]["has_tails"] and not res["-"]["has_tails"]


@pytest.mark.parametrize("m", [1, 2])
def test_unity_with_shifted_v(m):
    assert check_unity(m, conv=SHIFTED_V).passed


@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("indexing", ["reflected", "slot"])
def test_exchange(m, indexing):
    assert check_exchange(m, "X", indexing=indexing).passed
    assert check_exchange(m, "phi", indexing=indexing).passed


def test_exchange_stated_minus_lines_fail():
    rep = check_exchange(1, "X", minus_factor="stated")
    assert rep.status == "fail"
    assert all("-" in f.location for f in rep.failures)


def test_same_index_middle_component_only():
    rep = check_same_index(2)
    assert rep.failure_count == 4
    assert all(" i=2 " not in f.location + " " for f in rep.failures)
    c = rep.notes["constants"]
    assert (c["X++_1"], c["X++_2"], c["X++_3"]) == ("1", "q^2", "q^4")
    assert check_same_index(1).status == "fail"


def test_like_sign_clause():
    assert check_like_sign_clause(1).passed
    assert check_like_sign_clause(1, right_dressing="stated").status == "fail"


def test_commutator_level_two():
    assert check_parafermion_commutator(1, N=1, W=1).passed


def test_commutator_negative_controls():
    assert check_parafermion_commutator(1, N=0, W=1, delta_reading="a").status == "fail"
    assert check_parafermion_commutator(1, N=0, W=1, conv=SHIFTED_V).status == "fail"


def test_commutator_cross_backend_agrees():
    ex = check_parafermion_commutator(1, N=0, W=1, record_values=True)
    nu = check_parafermion_commutator(1, N=0, W=1, backend="numeric", record_values=True)
    assert compare_backends(ex, nu).passed


def test_fermions():
    assert check_fermions().passed


@pytest.mark.parametrize("indexing,law", [
    ("reflected", {"1,1": "0", "1,2": "(q) * w^1 * delta(q^-2 z/w)",
                   "2,1": "(q^-1) * w^1 * delta(q^2 z/w)", "2,2": "0"}),
    ("slot", {"1,1": "(q) * w^1 * delta(q^-2 z/w)", "1,2": "0",
              "2,1": "0", "2,2": "(q^-1) * w^1 * delta(q^2 z/w)"}),
])
def test_anticommutator_law(indexing, law):
    rep = check_anticommutator(indexing=indexing)
    assert rep.status == "fail"
    assert rep.notes["found"] == law


def test_complementarity_level_two_slot_indexing():
    assert check_complementarity(1, 0, indexing="slot").passed
    assert check_complementarity(1, 0).status == "fail"


@pytest.mark.parametrize("N", [0, 1])
def test_complementarity_level_three_centred(N):
    rep = check_complementarity(2, N, indexing="slot")
    assert rep.status == "fail"
    centred = rep.notes["centred"]
    assert centred and all(v["tails_and_lattice"] for v in centred.values())


@pytest.mark.parametrize("m,N,M", [(1, 0, 0), (2, 0, 0), (2, 0, 1), (2, 1, 0), (2, 1, 1)])
def test_multi_exchange(m, N, M):
    assert check_multi_exchange(m, N, M).passed
