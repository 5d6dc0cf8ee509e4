"""Acceptance criteria 1-8.

Each test records one part of a criterion; the terminal summary prints one
pass/fail line per criterion.  Exact checks use zero tolerance; numeric
comparisons use the default sample q = 0.7303 + 0.1159i and tolerance 1e-9.
"""

import time
from functools import lru_cache
from math import comb

import pytest

from qcurrents.cli import compare_backends
from qcurrents.currents import check_defining_relations, check_ope, make_field
from qcurrents.integrability import (check_collapse, check_diff_eq_fused, check_diff_eq_single,
                                     check_pole_structure, check_vanishing)
from qcurrents.parafermion import (VConventions, check_commutant, check_complementarity,
                                   check_coupling, check_exchange, check_factorization,
                                   check_like_sign_clause, check_parafermion_commutator,
                                   check_survivor_counts, check_unity)
from qcurrents.scalar import DEFAULT_Q, DEFAULT_TOL

TOL = 1e-9
Q = complex(0.7303, 0.1159)
RELATION_RUNS = {"F0": (0, (0,), 4, 3), "F1": (0, (1,), 4, 3), "F(x)F": (1, (0, 0), 3, 2)}


def test_pinned_sample():
    assert DEFAULT_Q == Q and DEFAULT_TOL == TOL


@lru_cache(maxsize=None)
def relations_exact(name):
    m, sectors, N, W = RELATION_RUNS[name]
    t0 = time.perf_counter()
    rep = check_defining_relations(m, list(sectors), N, W, record_values=True)
    return rep, time.perf_counter() - t0


@lru_cache(maxsize=None)
def ope_exact():
    return check_ope(N=4, W=2, record_values=True)


@lru_cache(maxsize=None)
def commutator_level_two():
    return check_parafermion_commutator(1, N=4, W=2, backend="exact", record_values=True)


def _line(rep):
    return f"{rep.assertions} assertions, {rep.failure_count} failures"


def _cross_line(rep):
    n, big = rep.notes["numeric_only_locations"], rep.notes["numeric_only_max_abs"]
    return _line(rep) + (f"; {n} numeric-only locations, max |value| {big:.1e}" if n else "")


# -- 1 ----------------------------------------------------------------------

@pytest.mark.parametrize("name", list(RELATION_RUNS))
def test_c1_defining_relations(acceptance, name):
    rep, secs = relations_exact(name)
    ok = rep.passed and secs < 300
    acceptance(1, f"{name} N={rep.params['N']} W={rep.params['W']}", ok,
               f"{_line(rep)}, {secs:.0f} s")
    assert rep.passed, rep.failures[:3]
    assert secs < 300


# -- 2 ----------------------------------------------------------------------

def test_c2_ope(acceptance):
    rep = ope_exact()
    closed = [k for k in rep.notes if " " in k]
    acceptance(2, "closed forms + oracle, degree <= 4", rep.passed,
               f"{_line(rep)}; " + "; ".join(f"{k}: {rep.notes[k]}" for k in closed))
    assert rep.passed, rep.failures[:3]
    assert len(closed) == 4


# -- 3 ----------------------------------------------------------------------

@pytest.mark.parametrize("sign", "+-")
def test_c3_single(acceptance, sign):
    rep = check_diff_eq_single(sign, N=4, W=2)
    acceptance(3, f"level one x{sign}, FFVO and modes to degree 4", rep.passed, _line(rep))
    assert rep.passed, rep.failures[:3]


@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("sign", "+-")
def test_c3_fused(acceptance, m, sign):
    rep = check_diff_eq_fused(sign, m, N=2, W=2)
    acceptance(3, f"fused x{sign} m={m} slotwise", rep.passed, _line(rep))
    assert rep.passed, rep.failures[:3]


# -- 4 ----------------------------------------------------------------------

@pytest.mark.parametrize("sign", "+-")
def test_c4_pole_structure(acceptance, sign):
    rep = check_pole_structure(1, N=3, window=2, sign=sign)
    acceptance(4, f"cleared x{sign}x{sign} on F(x)F, degree <= 3", rep.passed, _line(rep))
    assert rep.passed, rep.failures[:3]


@pytest.mark.parametrize("m", [0, 1])
@pytest.mark.parametrize("sign", "+-")
def test_c4_vanishing(acceptance, m, sign):
    rep = check_vanishing(m, N=2, sign=sign)
    acceptance(4, f"x{sign} product at q^2 spacing vanishes, m={m}", rep.passed, _line(rep))
    assert rep.passed, rep.failures[:3]


# -- 5 ----------------------------------------------------------------------

@pytest.mark.parametrize("m", [0, 1, 2])
def test_c5_collapse(acceptance, m):
    rep = check_collapse(m)
    acceptance(5, f"m={m}: {(m + 1) ** (m + 1) - 1} cross terms ZeroOperator per sign",
               rep.passed, _line(rep))
    assert rep.passed, rep.failures[:3]


def test_c5_survivor_counts(acceptance):
    rep = check_survivor_counts(2, N_values=(0, 1))
    ok = rep.passed and all(len(rep.notes[f"{s} N={N}"]) == comb(3, N + 1)
                            for s in "+-" for N in (0, 1))
    acceptance(5, "m=2 survivors = binomial(3, N+1), N=0,1", ok, _line(rep))
    assert ok


# -- 6 ----------------------------------------------------------------------

@pytest.mark.parametrize("m", [0, 1, 2])
def test_c6_commutant(acceptance, m):
    reps = [check_coupling(m, K=12)]
    if m:
        reps.append(check_commutant(m, K=12))
    ok = all(r.passed for r in reps)
    acceptance(6, f"couplings and commutant m={m}, k <= 12", ok,
               "; ".join(_line(r) for r in reps))
    assert ok


@pytest.mark.parametrize("m", [1, 2])
def test_c6_unity(acceptance, m):
    rep = check_unity(m)
    acceptance(6, f"descending chains are the identity, m={m}", rep.passed,
               f"residual {rep.notes['residual']}" if not rep.passed else _line(rep))
    assert rep.passed, rep.notes["residual"]


@pytest.mark.parametrize("N", [0, 1])
def test_c6_complementarity(acceptance, N):
    rep = check_complementarity(2, N)
    acceptance(6, f"complementary multi-parafermions m=2 N={N}", rep.passed,
               f"{_line(rep)}, truncated={rep.truncated}")
    assert rep.passed, rep.failures[:3]


def test_c6_commutator_level_two(acceptance):
    rep = commutator_level_two()
    acceptance(6, "parafermion commutator m=1, exact, degree <= 4", rep.passed, _line(rep))
    assert rep.passed, rep.failures[:3]


def test_c6_commutator_level_three(acceptance):
    rep = check_parafermion_commutator(2, N=2, W=2, backend="numeric", q=Q)
    acceptance(6, "parafermion commutator m=2, numeric within 1e-9", rep.passed, _line(rep))
    assert rep.passed, rep.failures[:3]


# -- 7 ----------------------------------------------------------------------

@pytest.mark.parametrize("name", list(RELATION_RUNS))
def test_c7_relations(acceptance, name):
    ex, _ = relations_exact(name)
    m, sectors, N, W = RELATION_RUNS[name]
    nu = check_defining_relations(m, list(sectors), N, W, field=make_field(m, "numeric", Q),
                                  record_values=True)
    rep = compare_backends(ex, nu, Q, TOL)
    acceptance(7, f"defining relations {name}", rep.passed, _cross_line(rep))
    assert rep.passed, rep.failures[:3]


def test_c7_ope(acceptance):
    nu = check_ope(N=4, W=2, field=make_field(0, "numeric", Q), record_values=True)
    rep = compare_backends(ope_exact(), nu, Q, TOL)
    acceptance(7, "OPE oracle", rep.passed, _cross_line(rep))
    assert rep.passed, rep.failures[:3]


def test_c7_commutator(acceptance):
    nu = check_parafermion_commutator(1, N=4, W=2, backend="numeric", q=Q, record_values=True)
    rep = compare_backends(commutator_level_two(), nu, Q, TOL)
    acceptance(7, "parafermion commutator m=1", rep.passed, _cross_line(rep))
    assert rep.passed, rep.failures[:3]


FIELD_GENERIC = {
    "difference equation x+": (0, lambda f: check_diff_eq_single("+", 3, 2, f)),
    "difference equation x-": (0, lambda f: check_diff_eq_single("-", 3, 2, f)),
    "couplings m=1": (1, lambda f: check_coupling(1, f, K=12)),
    "couplings m=2": (2, lambda f: check_coupling(2, f, K=12)),
    "factorization m=1": (1, lambda f: check_factorization(1, f)),
    "factorization m=2": (2, lambda f: check_factorization(2, f)),
}


@pytest.mark.parametrize("name", list(FIELD_GENERIC))
def test_c7_same_outcome(acceptance, name):
    m, run = FIELD_GENERIC[name]
    ex, nu = run(make_field(m)), run(make_field(m, "numeric", Q))
    ok = (ex.status, ex.assertions, ex.failure_count) == (nu.status, nu.assertions,
                                                          nu.failure_count)
    acceptance(7, f"{name}: same outcome on both backends", ok,
               f"exact {_line(ex)} / numeric {_line(nu)}")
    assert ok


# -- 8 ----------------------------------------------------------------------

def _fails(rep):
    return rep.status == "fail"


NEGATIVE = {
    "delta parse a (relations)": lambda: check_defining_relations(0, [0], 1, 1, delta_parse="a"),
    "coupling denominator 1": lambda: check_coupling(1, K=6, denominator="1"),
    "literal [2k] in contractions": lambda: check_like_sign_clause(1, two_k="literal"),
    "flipped V exponent": lambda: check_commutant(1, K=6, conv=VConventions(flip_exponent=True)),
    "V annihilation sign": lambda: check_commutant(1, K=6,
                                                   conv=VConventions(annihilation_sign=1)),
    "V z-power 1": lambda: check_parafermion_commutator(
        1, N=0, W=1, conv=VConventions(zconst=1)),
    "delta reading a (commutator)": lambda: check_parafermion_commutator(
        1, N=0, W=1, delta_reading="a"),
    "no pole clearing": lambda: check_pole_structure(1, N=1, window=1, sign="+", clearing=None),
    "stated OPE closed forms": lambda: check_ope(N=0, W=1, reading="stated"),
    "stated minus exchange factor": lambda: check_exchange(1, "X", minus_factor="stated"),
}


@pytest.mark.parametrize("name", list(NEGATIVE))
def test_c8_negative_control(acceptance, name):
    rep = NEGATIVE[name]()
    acceptance(8, f"{name} is rejected", _fails(rep), _line(rep))
    assert _fails(rep)
