"""Fractional-lattice vertex operators V, quantum parafermions and their relations."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product

from .currents import coproduct_cartan, coproduct_term, make_field, tail_order
from .fock import FockVector, basis_enumerate, coproduct_weight, heis_bracket
from .integrability import NonVanishingCrossTerm
from .report import RelationReport
from .vertexcalc import (FFVO, IndeterminateProduct, PoleAtSpecialization, ScalarSeries,
                         base_exponent, contract, dressed_normal_pair, ffvo_equal, is_identity,
                         is_zero_operator, normal_compose, normal_quotient,
                         spaced_product)

INDEXINGS = ("reflected", "slot")
TWO_K_READINGS = ("qint", "literal")
COUPLING_DENOMINATORS = ("k", "1")


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VConventions:
    """Knobs of ``V(+-m, z)`` that its defining formula leaves open.

    ``zconst`` is the constant z-power; ``annihilation_sign`` multiplies the
    annihilation tail relative to the creation tail; ``flip_exponent``
    replaces ``q^{-+(m+1)k/2}`` by ``q^{+-(m+1)k/2}`` (a negative control);
    ``prefactor_exp`` multiplies V by ``q^{prefactor_exp * m}``.
    """

    zconst: Fraction = Fraction(0)
    annihilation_sign: int = -1
    flip_exponent: bool = False
    prefactor_exp: Fraction = Fraction(0)


DEFAULT_V = VConventions()


def big_v(sign: str, m: int, field, K: int = 8, conv: VConventions = DEFAULT_V) -> FFVO:
    """``V(+-m, z)``: fused Heisenberg tails over ``[(m+1)k]`` and charge ``+-1/(m+1)`` per slot."""
    f = field
    sg = 1 if sign == "+" else -1
    e = Fraction(-sg * (m + 1), 2)
    if conv.flip_exponent:
        e = -e

    def cre(j):
        return lambda k: f.qpow(e * k) * coproduct_weight(f, m, j, k) / f.qint((m + 1) * k) * sg

    def ann(j):
        return lambda k: (f.qpow(e * k) * coproduct_weight(f, m, j, k) / f.qint((m + 1) * k)
                          * (sg * conv.annihilation_sign))

    mu = Fraction(sg, m + 1)
    return FFVO.build(f, K, m + 1, creation={j: cre(j) for j in range(m + 1)},
                      annihilation={j: ann(j) for j in range(m + 1)},
                      shift=[mu] * (m + 1), zlaw=[mu] * (m + 1), zconst=conv.zconst,
                      prefactor=f.qpow(Fraction(conv.prefactor_exp) * m), label=f"V({sign}{m})")


def slot_of(sign: str, m: int, i: int, indexing: str = "reflected") -> int:
    """Tensor slot carrying the current in the ``i``-th component.

    In the reflected numbering ``X^-_i`` has its current at ``z q^{i-1}``, which is
    slot ``m+2-i``; ``X^+_i`` sits on slot ``i`` either way.
    """
    if indexing not in INDEXINGS:
        raise ValueError(f"indexing must be one of {INDEXINGS}")
    if not 1 <= i <= m + 1:
        raise ValueError("component index out of range")
    if sign == "-" and indexing == "reflected":
        return m + 2 - i
    return i


def x_component(sign: str, m: int, i: int, field, K: int = 8, indexing: str = "reflected") -> FFVO:
    op = coproduct_term(sign, m, slot_of(sign, m, i, indexing), field, K)
    return op.relabel(f"X{sign}_{i}")


def parafermion_component(sign: str, m: int, i: int, field, K: int = 8,
                          indexing: str = "reflected", conv: VConventions = DEFAULT_V) -> FFVO:
    """``phi^{+-m}_i = :X^{+-m}_i V(+-m)^{-1}:``."""
    X = x_component(sign, m, i, field, K, indexing)
    return normal_quotient(X, big_v(sign, m, field, K, conv)).relabel(f"phi{sign}_{i}")


def parafermion_components(sign: str, m: int, field, K: int = 8, indexing: str = "reflected",
                           conv: VConventions = DEFAULT_V) -> list:
    return [parafermion_component(sign, m, i, field, K, indexing, conv) for i in range(1, m + 2)]


def contraction_pair(m: int, field, K: int = 8, two_k: str = "qint") -> dict:
    """``f^+(w,z)``, ``f^-(w,z)`` and ``p(w,z)`` as series in ``x = w/z``.

    ``two_k`` selects how the numerator ``2k`` is read: ``qint`` gives
    ``[2k]``, ``literal`` the integer ``2k``.
    """
    if two_k not in TWO_K_READINGS:
        raise ValueError(f"two_k must be one of {TWO_K_READINGS}")
    f = field
    M = m + 1

    def base(k):
        num = f.qint(2 * k) if two_k == "qint" else f.const(2 * k)
        return num / (f.const(k) * f.qint(M * k))

    out = {}
    for sign, sg in (("+", 1), ("-", -1)):
        g = [-base(k) * f.qpow(-sg * M * k) for k in range(1, K + 1)]
        out["f" + sign] = ScalarSeries.from_gammas(f, g, "w/z", zpow=Fraction(2, M))
    out["p"] = ScalarSeries.from_gammas(f, [base(k) for k in range(1, K + 1)], "w/z",
                                        zpow=Fraction(-2, M), phase=-1)
    return out


# ---------------------------------------------------------------------------
# ordered products and multi-index parafermions
# ---------------------------------------------------------------------------

def ordered_expand(sign: str, m: int, N: int, field=None, K: int = 8,
                   indexing: str = "reflected") -> dict:
    """Survivors of the ``(N+1)``-fold spaced product of coproduct currents.

    For ``+`` the factors sit at ``z, zq^2, ..., zq^{2N}``; for ``-`` at
    ``zq^{2N}, ..., z``.  Returns ``{index tuple: FFVO}`` for the terms that
    are not :class:`ZeroOperator`; index tuples list the component of each
    factor from left to right.
    """
    if not 0 <= N <= m:
        raise ValueError("need 0 <= N <= m")
    f = field or make_field(m)
    spac = [Fraction(2 * t) for t in range(N + 1)]
    if sign == "-":
        spac = spac[::-1]
    comps = [x_component(sign, m, i, f, K, indexing) for i in range(1, m + 2)]
    out = {}
    for idx in product(range(1, m + 2), repeat=N + 1):
        try:
            op = spaced_product([comps[i - 1] for i in idx], spac)
        except (PoleAtSpecialization, IndeterminateProduct) as exc:
            raise NonVanishingCrossTerm(f"indices {idx}: {exc}") from exc
        if not is_zero_operator(op):
            out[idx] = op
    return out


def check_survivor_counts(m: int, field=None, K: int = 8, indexing: str = "reflected",
                          N_values=None) -> RelationReport:
    """``(N+1)``-fold spaced products keep ``binomial(m+1, N+1)`` index tuples."""
    f = field or make_field(m)
    N_values = range(m + 1) if N_values is None else N_values
    rep = RelationReport("survivor_counts", {"m": m, "K": K, "indexing": indexing,
                                             "N": list(N_values)})
    for sign in "+-":
        for N in N_values:
            got = ordered_expand(sign, m, N, f, K, indexing)
            want = math.comb(m + 1, N + 1)
            rep.record(f"{sign} N={N}", len(got) == want, len(got), want)
            rep.notes[f"{sign} N={N}"] = [list(t) for t in sorted(got)]
    return rep.finish()


def v_chain(sign: str, m: int, n: int, field, K: int = 8, conv: VConventions = DEFAULT_V) -> FFVO:
    """``:V(z) V(zq^2) ... V(zq^{2(n-1)}):`` (no contraction factors)."""
    V = big_v(sign, m, field, K, conv)
    return normal_compose(*[V] * n, spacings=[2 * t for t in range(n)])


def multi_parafermions(sign: str, m: int, N: int, field=None, K: int = 8,
                       indexing: str = "reflected", conv: VConventions = DEFAULT_V) -> dict:
    """``{index tuple: phi_{tuple}}`` with ``X-chain = :V-chain: phi_{tuple}``."""
    f = field or make_field(m)
    chain = v_chain(sign, m, N + 1, f, K, conv)
    return {idx: normal_quotient(op, chain).relabel(f"phi{sign}_{idx}")
            for idx, op in ordered_expand(sign, m, N, f, K, indexing).items()}


# ---------------------------------------------------------------------------
# mode-level exchange identities
# ---------------------------------------------------------------------------

def _classes(S, A, B, b):
    return ((-(base_exponent(A, b) + S.zpow)) % 1, (-(base_exponent(B, b) + S.wpow)) % 1)


def _window(cls, W):
    lo = cls - math.floor(W) - 1
    return [lo + n for n in range(2 * math.floor(W) + 3) if abs(lo + n) <= W]


def exchange_difference(terms, r, s, b):
    """``sum S_L :A(z)B(w): - S_R :A(z)B(w):`` at ``z^{-r} w^{-s}`` on ``b``.

    ``terms`` holds ``(S_L, S_R, A, B)`` with ``S_L`` expanded in ``w/z`` and
    ``S_R`` in ``z/w``.
    """
    f = terms[0][2].field
    out = FockVector(f)
    for SL, SR, A, B in terms:
        out = out + dressed_normal_pair(SL, A, B, r, s, b) - dressed_normal_pair(SR, A, B, r, s, b)
    return out


DELTA_READINGS = ("a", "b")


def delta_side(f, m: int, r, s, reading: str = "a"):
    """Coefficient of ``z^{-r} w^{-s}`` in ``(delta(z/wq^{m+1}) - delta(z/wq^{-(m+1)}))/(q - q^-1)``.

    Reading ``a`` takes ``z/(w q^c)``, reading ``b`` takes ``(z/w) q^c``.
    """
    if r + s != 0 or Fraction(r).denominator != 1:
        return f.zero()
    c = m + 1 if reading == "a" else -(m + 1)
    val = f.qpow(c * Fraction(r)) - f.qpow(-c * Fraction(r))
    return val / (f.qpow(1) - f.qpow(-1))


def _backend(m: int, backend: str, q=None):
    exact = make_field(m)
    if backend == "exact":
        return exact, exact
    return exact, make_field(m, "numeric", q)


def _convert(ops, f):
    return [op if op.field is f else op.to_field(f) for op in ops]


def check_parafermion_commutator(m: int, N: int = 2, W: int = 2, backend: str | None = None, q=None,
                    K: int | None = None, indexing: str = "reflected", conv: VConventions = DEFAULT_V,
                    delta_reading: str = "b", two_k: str = "qint",
                    record_values: bool = False) -> RelationReport:
    """Mode-level parafermion commutator against the two delta functions.

    The p-dressed products are rebuilt from contractions and normal-ordered
    pairs, so each coefficient is a finite sum.  Defaults: exact backend for
    ``m <= 1`` and numeric otherwise.  The like-sign clause is checked at the
    function level on the exact field and merged in.
    """
    if delta_reading not in DELTA_READINGS:
        raise ValueError("delta reading must be 'a' or 'b'")
    backend = backend or ("exact" if m <= 1 else "numeric")
    exact, f = _backend(m, backend, q)
    K = K or tail_order(N, W) + 2
    plus = _convert(parafermion_components("+", m, exact, K, indexing, conv), f)
    minus = _convert(parafermion_components("-", m, exact, K, indexing, conv), f)
    P = contraction_pair(m, f, K, two_k)
    pl, pr = P["p"], P["p"].swap_variables()
    terms = [(pl * contract(A, B), pr * contract(B, A, swap=True), A, B) for A in plus for B in minus]
    rep = RelationReport("parafermion_commutator", {"m": m, "N": N, "W": W, "K": K, "backend": f.name,
                                       "indexing": indexing, "v_zconst": str(conv.zconst),
                                       "delta_reading": delta_reading, "two_k": two_k})
    if record_values:
        rep.values = {}
    rep.truncated = any(not (t[0].is_closed() and t[1].is_closed()) for t in terms)
    for b in basis_enumerate(m, [0] * (m + 1), N):
        v = FockVector.basis(f, b)
        classes = set()
        for SL, SR, A, B in terms:
            classes.add(_classes(SL, A, B, b))
            classes.add(_classes(SR, A, B, b))
        for cr, cs in sorted(classes):
            for r in _window(cr, W):
                for s in _window(cs, W):
                    lhs = exchange_difference(terms, r, s, b)
                    rhs = v.scale(delta_side(f, m, r, s, delta_reading))
                    for st in sorted(set(lhs.terms) | set(rhs.terms), key=str):
                        rep.compare(f, f"(r={r},s={s}) {b} -> {st}", lhs.coefficient(st),
                                    rhs.coefficient(st))
    rep.absorb(check_like_sign_clause(m, exact, K, indexing, conv, two_k), prefix="like-sign ")
    return rep.finish()


# ---------------------------------------------------------------------------
# function-level exchange relations
# ---------------------------------------------------------------------------

def _lin(f, K, a, b, orientation, sign=1):
    """``sign (q^a z - q^b w)`` read in ``orientation``; for ``z/w`` the roles swap."""
    s = ScalarSeries.linear(f, K, a, b, orientation)
    return s if sign == 1 else replace(s, coeff=-s.coeff)


def _g_exchange(f, K):
    """``(w - q^2 z)/(q^2 w - z)``, which is both ``g(w/z)^{-1}`` and ``g(z/w)``, in ``z/w``."""
    return _lin(f, K, 0, 2, "z/w") / _lin(f, K, 2, 0, "z/w")


def _exchange_assert(rep, loc, SL, SR):
    ok, detail = SL.same_function(SR)
    if not (SL.is_closed() and SR.is_closed()):
        rep.truncated = True
    rep.record(loc, ok, SL.to_str(), f"{SR.to_str()} ({detail})" if detail else SR.to_str())


def check_exchange(m: int, level: str = "X", field=None, K: int = 8, indexing: str = "reflected",
                   conv: VConventions = DEFAULT_V, two_k: str = "qint",
                   minus_factor: str = "inverse") -> RelationReport:
    """Pairwise exchange relations for distinct components.

    Each relation ``L(z,w) A(z)B(w) = R(z,w) B(w)A(z)`` is checked as equality
    of ``L * <A B>`` and ``R * <B A>`` as functions, the normal-ordered parts
    being symmetric.  Same-index relations are handled by
    :func:`check_same_index`.

    ``minus_factor="stated"`` uses the same factor for both signs;
    ``"inverse"`` uses its reciprocal for the lowering components, as the
    defining relations of ``x^-`` require.
    """
    if level not in ("X", "phi"):
        raise ValueError("level must be 'X' or 'phi'")
    f = field or make_field(m)
    if level == "X":
        comps = {s: [x_component(s, m, i, f, K, indexing) for i in range(1, m + 2)] for s in "+-"}
        one = ScalarSeries.one(f, K)
        dress = {"+": one, "-": one, "p": one}
    else:
        comps = {s: parafermion_components(s, m, f, K, indexing, conv) for s in "+-"}
        P = contraction_pair(m, f, K, two_k)
        dress = {"+": P["f+"], "-": P["f-"], "p": P["p"]}
    if minus_factor not in ("stated", "inverse"):
        raise ValueError("minus_factor must be 'stated' or 'inverse'")
    g = _g_exchange(f, K)
    gfac = {"+": g, "-": g.inverse() if minus_factor == "inverse" else g}
    rep = RelationReport(f"exchange_{level}", {"m": m, "K": K, "indexing": indexing,
                                               "two_k": two_k, "minus_factor": minus_factor})
    n = m + 1
    for i in range(n):
        for j in range(i + 1, n):
            for s in "+-":
                lo, hi = comps[s][i], comps[s][j]
                # A(z)B(w) = g-factor B(w)A(z) for (A,B) = (lower, higher) and (higher, lower)
                for tag, A, B in ((f"{s}{i + 1}{s}{j + 1}", lo, hi), (f"{s}{j + 1}{s}{i + 1}", hi, lo)):
                    SL = dress[s] * contract(A, B)
                    SR = contract(B, A, swap=True) * dress[s].swap_variables() * gfac[s]
                    _exchange_assert(rep, f"like-sign {tag}", SL, SR)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for A, B, tag in ((comps["+"][i], comps["-"][j], f"+{i + 1}-{j + 1}"),
                              (comps["-"][j], comps["+"][i], f"-{j + 1}+{i + 1}")):
                SL = dress["p"] * contract(A, B)
                SR = contract(B, A, swap=True) * dress["p"].swap_variables()
                _exchange_assert(rep, f"mixed-sign {tag}", SL, SR)
    return rep.finish()


def _stated_same_index(f, K, kind):
    """Contraction functions in the same-index relations, series in ``w/z``.

    ``++`` is read as the product ``z^2 (1-x)(1-q^-2 x)``; a denominator
    for the second factor is not reproduced by any ordering.
    """
    one = ScalarSeries.one(f, K)
    if kind == "++":
        return replace(one, closed=((-2, 1), (0, 1)), zpow=Fraction(2))
    if kind == "--":
        return replace(one, closed=((0, 1), (2, 1)), zpow=Fraction(2))
    return replace(one, closed=((-1, -1), (1, -1)), zpow=Fraction(-2))


def check_same_index(m: int, field=None, K: int = 8, indexing: str = "slot",
                     conv: VConventions = DEFAULT_V, two_k: str = "qint") -> RelationReport:
    """Same-index contractions at the X and phi levels.

    The stated forms omit a component constant, so the assertion is that the
    computed contraction is the stated function times a constant; the
    constants go to ``notes``.  At the phi level the dressing must undo the
    V contraction exactly, which is asserted without slack (for the mixed
    pair up to the stated phase, which the operators cannot produce).
    """
    f = field or make_field(m)
    P = contraction_pair(m, f, K, two_k)
    rep = RelationReport("same_index", {"m": m, "K": K, "indexing": indexing})
    consts = {}
    for i in range(1, m + 2):
        X = {s: x_component(s, m, i, f, K, indexing) for s in "+-"}
        phi = {s: parafermion_component(s, m, i, f, K, indexing, conv) for s in "+-"}
        for kind, a, b, d in (("++", "+", "+", P["f+"]), ("--", "-", "-", P["f-"]),
                              ("+-", "+", "-", P["p"]), ("-+", "-", "+", P["p"])):
            cx = contract(X[a], X[b])
            ratio = cx / _stated_same_index(f, K, "+-" if kind == "-+" else kind)
            shape_ok = ratio.is_closed() and not ratio.closed and ratio.zpow == 0 and ratio.wpow == 0
            rep.record(f"X{kind} i={i} shape", shape_ok, cx.to_str(), "stated form")
            if shape_ok:
                consts[f"X{kind}_{i}"] = f.fmt(ratio.coeff)
            dressed = d * contract(phi[a], phi[b])
            target = cx if kind in ("++", "--") else replace(cx, phase=cx.phase - 1)
            ok, detail = dressed.same_function(target)
            rep.record(f"phi{kind} i={i}", ok, dressed.to_str(), detail or target.to_str())
    rep.notes["constants"] = consts
    return rep.finish()


def check_like_sign_clause(m: int, field=None, K: int = 8, indexing: str = "reflected",
                           conv: VConventions = DEFAULT_V, two_k: str = "qint",
                           right_dressing: str = "same") -> RelationReport:
    """``f^+-(w,z)(z - w q^{+-2}) phi phi = f^?(z,w)(z q^{+-2} - w) phi phi`` pairwise.

    ``right_dressing="same"`` uses ``f^+-`` on the right; ``"stated"`` uses
    ``f^-+`` instead.  Every ordered component pair is checked, which
    is sufficient for the summed relation.
    """
    f = field or make_field(m)
    P = contraction_pair(m, f, K, two_k)
    rep = RelationReport("like_sign_clause", {"m": m, "K": K, "indexing": indexing,
                                              "right_dressing": right_dressing})
    for s, e in (("+", 2), ("-", -2)):
        other = s if right_dressing == "same" else ("-" if s == "+" else "+")
        comps = parafermion_components(s, m, f, K, indexing, conv)
        left = P["f" + s] * _lin(f, K, 0, e, "w/z")
        right = P["f" + other].swap_variables() * _lin(f, K, 0, e, "z/w", sign=-1)
        for i, A in enumerate(comps, 1):
            for j, B in enumerate(comps, 1):
                _exchange_assert(rep, f"{s}{i}{s}{j}", left * contract(A, B),
                                 contract(B, A, swap=True) * right)
    return rep.finish()


# ---------------------------------------------------------------------------
# couplings, commutant, factorization, unity
# ---------------------------------------------------------------------------

def _couplings(op: FFVO, m: int, k: int):
    """``[Delta^m(a_k), creation part]`` and ``[annihilation part, Delta^m(a_-k)]``."""
    f = op.field
    kap = heis_bracket(f, k)
    cre = ann = f.zero()
    for j in range(m + 1):
        w = coproduct_weight(f, m, j, k)
        cre = cre + op.creation[j][k - 1] * w
        ann = ann + op.annihilation[j][k - 1] * w
    return cre * kap, ann * kap


def coupling_closed_form(f, sign: str, m: int, k: int, denominator: str = "k"):
    """Stated ``i``-independent couplings, ``(creation, annihilation)``."""
    if denominator not in COUPLING_DENOMINATORS:
        raise ValueError(f"denominator must be one of {COUPLING_DENOMINATORS}")
    sg = 1 if sign == "+" else -1
    val = f.qint(2 * k) * f.qpow(Fraction(-sg * (m + 1) * k, 2))
    if denominator == "k":
        val = val / f.const(k)
    return val * sg, -val * sg


def check_coupling(m: int, field=None, K: int = 12, denominator: str = "k",
                   indexing: str = "reflected", conv: VConventions = DEFAULT_V) -> RelationReport:
    """Heisenberg couplings of every ``X^{+-m}_i`` against the closed forms.

    ``V(+-m)`` must carry the same couplings (that is what makes the quotient
    a commutant), so it is checked alongside.
    """
    f = field or make_field(m)
    rep = RelationReport("coupling", {"m": m, "K": K, "denominator": denominator,
                                      "indexing": indexing})
    for sign in "+-":
        ops = [(f"X{sign}_{i}", x_component(sign, m, i, f, K, indexing)) for i in range(1, m + 2)]
        ops.append((f"V({sign})", big_v(sign, m, f, K, conv)))
        for name, op in ops:
            for k in range(1, K + 1):
                cre, ann = _couplings(op, m, k)
                ecre, eann = coupling_closed_form(f, sign, m, k, denominator)
                rep.compare(f, f"{name} creation k={k}", cre, ecre)
                rep.compare(f, f"{name} annihilation k={k}", ann, eann)
    return rep.finish()


def check_commutant(m: int, field=None, K: int = 12, indexing: str = "reflected",
                    conv: VConventions = DEFAULT_V, subject: str = "phi") -> RelationReport:
    """Contractions with the fused Cartan currents are trivial in both orders.

    ``subject="V"`` runs the same test on ``V(+-m)`` itself, which must fail.
    """
    f = field or make_field(m)
    rep = RelationReport("commutant", {"m": m, "K": K, "indexing": indexing,
                                       "subject": subject,
                                       "flip_exponent": conv.flip_exponent})
    cartans = {lab: coproduct_cartan(lab, m, f, K) for lab in ("phi", "psi")}
    for sign in "+-":
        if subject == "V":
            ops = [(f"V({sign})", big_v(sign, m, f, K, conv))]
        else:
            ops = [(f"phi{sign}_{i}", parafermion_component(sign, m, i, f, K, indexing, conv))
                   for i in range(1, m + 2)]
        for name, op in ops:
            for lab, H in cartans.items():
                for order, S in (("left", contract(op, H)), ("right", contract(H, op))):
                    rep.record(f"{name} {lab} {order}", S.is_trivial(), S.to_str(), "1")
    return rep.finish()


def check_factorization(m: int, field=None, K: int = 8, indexing: str = "reflected",
                        conv: VConventions = DEFAULT_V) -> RelationReport:
    """``:V(+-m) phi^{+-m}_i:`` reproduces ``X^{+-m}_i`` exactly."""
    f = field or make_field(m)
    rep = RelationReport("factorization", {"m": m, "K": K, "indexing": indexing})
    for sign in "+-":
        V = big_v(sign, m, f, K, conv)
        for i in range(1, m + 2):
            X = x_component(sign, m, i, f, K, indexing)
            phi = normal_quotient(X, V)
            ffvo_equal(normal_compose(V, phi), X, report=rep, prefix=f"{sign}{i} ")
            shifts = [x - Fraction(1 if sign == "+" else -1, m + 1) for x in X.shift]
            rep.record(f"{sign}{i} charge", list(phi.shift) == shifts, phi.shift, shifts)
    return rep.finish()


def unity_chain(sign: str, m: int, field, K: int = 8, indexing: str = "reflected",
                conv: VConventions = DEFAULT_V) -> FFVO:
    """``:phi_{m+1}(z) phi_m(zq^2) ... phi_1(zq^{2m}):`` or the mirrored lowering chain."""
    comps = parafermion_components(sign, m, field, K, indexing, conv)
    if sign == "+":
        ops, sp = comps[::-1], [2 * t for t in range(m + 1)]
    else:
        ops, sp = comps, [-2 * t for t in range(m + 1)]
    return normal_compose(*ops, spacings=sp)


def check_unity(m: int, field=None, K: int = 8, indexing: str = "reflected",
                conv: VConventions = DEFAULT_V) -> RelationReport:
    """Descending parafermion chains against the identity FFVO.

    Whatever survives is kept in ``notes["residual"]``.
    """
    f = field or make_field(m)
    rep = RelationReport("unity", {"m": m, "K": K, "indexing": indexing,
                                   "v_zconst": str(conv.zconst)})
    ident = FFVO.identity(f, m + 1, K)
    residual = {}
    for sign in "+-":
        chain = unity_chain(sign, m, f, K, indexing, conv)
        ffvo_equal(chain, ident, report=rep, prefix=f"{sign} ")
        if not is_identity(chain):
            d = chain.describe()
            residual[sign] = {"prefactor": d["prefactor"], "zconst": d["zconst"],
                              "has_tails": chain.has_tails(), "shift": d["shift"]}
    rep.notes["residual"] = residual
    return rep.finish()


# ---------------------------------------------------------------------------
# level-two fermions
# ---------------------------------------------------------------------------

def check_fermions(field=None, K: int = 8, indexing: str = "reflected",
                   conv: VConventions = DEFAULT_V) -> RelationReport:
    """Sum equality, componentwise equality and self-anticommutation at ``m = 1``."""
    m = 1
    f = field or make_field(m)
    plus = parafermion_components("+", m, f, K, indexing, conv)
    minus = parafermion_components("-", m, f, K, indexing, conv)
    rep = RelationReport("fermions", {"m": m, "K": K, "indexing": indexing})
    unmatched = list(minus)
    for i, A in enumerate(plus, 1):
        hit = next((B for B in unmatched if ffvo_equal(A, B).passed), None)
        rep.record(f"sum: phi+_{i} occurs among phi-", hit is not None, A.label, "")
        if hit is not None:
            unmatched.remove(hit)
    for i, (A, B) in enumerate(zip(plus, minus), 1):
        ffvo_equal(A, B, report=rep, prefix=f"phi+_{i} = phi-_{i} ")
    for s, comps in (("+", plus), ("-", minus)):
        for i, A in enumerate(comps, 1):
            SL = contract(A, A)
            SR = contract(A, A, swap=True)
            _exchange_assert(rep, f"anticommute {s}{i}", SL, replace(SR, coeff=-SR.coeff))
    return rep.finish()


def check_anticommutator(field=None, K: int = 10, indexing: str = "reflected",
                         conv: VConventions = DEFAULT_V, N: int = 1, W: int = 2) -> RelationReport:
    """``{phi+_i(z), phi-_i(w)} = delta(q^-2 z/w)`` mode by mode, as stated.

    The off-diagonal pairs are reported in ``notes`` with the constant and
    monomial that the engine finds.
    """
    m = 1
    f = field or make_field(m)
    plus = parafermion_components("+", m, f, K, indexing, conv)
    minus = parafermion_components("-", m, f, K, indexing, conv)
    rep = RelationReport("anticommutator", {"m": m, "K": K, "N": N, "W": W,
                                            "indexing": indexing})
    found = {}
    vac = basis_enumerate(m, [0, 0], 0)[0]
    for i, A in enumerate(plus, 1):
        for j, B in enumerate(minus, 1):
            SR = contract(B, A, swap=True)
            terms = [(contract(A, B), replace(SR, coeff=-SR.coeff), A, B)]
            support = []
            for b in basis_enumerate(m, [0, 0], N):
                v = FockVector.basis(f, b)
                classes = {_classes(terms[0][0], A, B, b), _classes(terms[0][1], A, B, b)}
                for cr, cs in sorted(classes):
                    for r in _window(cr, W):
                        for s in _window(cs, W):
                            lhs = exchange_difference(terms, r, s, b)
                            nz = [(st, c) for st, c in lhs if not f.is_zero(c)]
                            if nz and b == vac:
                                support.append((r, s, lhs.coefficient(b)))
                            if i != j:
                                continue
                            want = f.qpow(2 * r) if r + s == 0 else f.zero()
                            rhs = v.scale(want)
                            for st in sorted(set(lhs.terms) | set(rhs.terms), key=str):
                                rep.compare(f, f"({i},{j}) (r={r},s={s}) {b} -> {st}",
                                            lhs.coefficient(st), rhs.coefficient(st))
            found[f"{i},{j}"] = _delta_law(f, support)
    rep.notes["found"] = found
    return rep.finish()


def _delta_law(f, support):
    """Read vacuum coefficients ``c_r`` at ``z^-r w^-s`` as ``c w^d delta(q^a z/w)``."""
    if not support:
        return "0"
    d = -(support[0][0] + support[0][1])
    coeff = {r: c for r, _, c in support}
    if 0 not in coeff or 1 not in coeff:
        return "unresolved"
    ratio = coeff[1] / coeff[0]
    a = next((e for e in range(-8, 9) if f.equal(ratio, f.qpow(-e))), None)
    if a is None:
        return "unresolved"
    return f"({f.fmt(coeff[0])}) * w^{d} * delta(q^{a} z/w)"


# ---------------------------------------------------------------------------
# complementary index sets
# ---------------------------------------------------------------------------

def _shape_match(A: FFVO, B: FFVO) -> tuple:
    """Tails and lattice agree; returns ``(agree, prefactor ratio, zconst difference)``."""
    rep = ffvo_equal(A, B)
    bad = [x.location for x in rep.failures]
    agree = all(loc in ("prefactor", "zconst") for loc in bad) and rep.failure_count == len(bad)
    f = A.field
    return agree, f.fmt(A.prefactor / B.prefactor), A.zconst - B.zconst


def check_complementarity(m: int, N: int, field=None, K: int = 8, indexing: str = "reflected",
                          conv: VConventions = DEFAULT_V) -> RelationReport:
    """Raising multi-parafermions against lowering ones on the complementary index set.

    Index sets have sizes ``N+1`` and ``m-N`` (all that a partition of
    ``{1..m+1}`` allows).  Besides the literal equalities and their sum, the
    notes record whether ``phi-_J(z)`` matches ``phi+_I(z q^{m-2N-1})`` in
    tails and lattice, with the leftover constant and z-power.
    """
    if not 0 <= N < m:
        raise ValueError("need 0 <= N < m")
    f = field or make_field(m)
    plus = multi_parafermions("+", m, N, f, K, indexing, conv)
    minus = multi_parafermions("-", m, m - N - 1, f, K, indexing, conv)
    rep = RelationReport("complementarity", {"m": m, "N": N, "K": K, "indexing": indexing,
                                             "v_zconst": str(conv.zconst)})
    full = set(range(1, m + 2))
    centred = {}
    by_set = {frozenset(J): (J, B) for J, B in minus.items()}
    for I, A in sorted(plus.items()):
        J, B = by_set.get(frozenset(full - set(I)), (tuple(sorted(full - set(I))), None))
        if B is None:
            rep.fail(f"{I} vs {J}", "survivor", "no lowering survivor")
            continue
        ffvo_equal(A, B, report=rep, prefix=f"{I} vs {J} ")
        agree, ratio, dz = _shape_match(B, A.rescale(m - 2 * N - 1))
        centred[f"{I}|{J}"] = {"tails_and_lattice": agree, "constant": ratio,
                               "zconst_difference": str(dz)}
    unmatched = list(minus.values())
    for I, A in sorted(plus.items()):
        hit = next((B for B in unmatched if ffvo_equal(A, B).passed), None)
        rep.record(f"sum: {I} occurs on the lowering side", hit is not None, A.label, "")
        if hit is not None:
            unmatched.remove(hit)
    rep.record("sum: sizes", len(plus) == len(minus), len(plus), len(minus))
    rep.notes["centred"] = centred
    rep.notes["shift"] = m - 2 * N - 1
    return rep.finish()


# ---------------------------------------------------------------------------
# exchange of multi-parafermions
# ---------------------------------------------------------------------------

def _cleared_dressing(f, K, P, sign: str, n_left: int, n_right: int):
    """Products of linear factors and shifted ``f^+-`` on both sides of the exchange.

    Left: ``prod (z q^{2j} - q^{+-2} w q^{2i}) f^+-(w q^{2i}, z q^{2j})`` in ``w/z``.
    Right: ``prod (q^{+-2} z q^{2j} - w q^{2i}) f^+-(z q^{2j}, w q^{2i})`` in ``z/w``.
    """
    e = 2 if sign == "+" else -2
    fs = P["f" + sign]
    left = ScalarSeries.one(f, K, "w/z")
    right = ScalarSeries.one(f, K, "z/w")
    for j in range(n_left):
        for i in range(n_right):
            left = left * _lin(f, K, 2 * j, e + 2 * i, "w/z") * fs.rescale(2 * j, 2 * i)
            right = (right * _lin(f, K, 2 * i, e + 2 * j, "z/w", sign=-1)
                     * fs.swap_variables().rescale(2 * j, 2 * i))
    return left, right


def check_multi_exchange(m: int, N: int, M: int, field=None, K: int = 8, indexing: str = "reflected",
                 conv: VConventions = DEFAULT_V, two_k: str = "qint") -> RelationReport:
    """Cleared exchange of ``phi^{m,N}(z)`` and ``phi^{m,M}(w)``.

    The raising clause uses the raising multi-parafermions with ``N+1`` and
    ``M+1`` factors; the lowering clause uses the lowering ones with ``m-N``
    and ``m-M`` factors on both sides (the right-hand ranges
    are read the same as the left).  Each pair of index tuples is checked as
    functions, which implies the summed identity.
    """
    if not (0 <= N < m and 0 <= M < m):
        raise ValueError("need 0 <= N, M < m")
    f = field or make_field(m)
    P = contraction_pair(m, f, K, two_k)
    rep = RelationReport("multi_exchange", {"m": m, "N": N, "M": M, "K": K, "indexing": indexing})
    clauses = (("+", N, M, N + 1, M + 1), ("-", m - N - 1, m - M - 1, m - N, m - M))
    for sign, a, b, na, nb in clauses:
        left, right = _cleared_dressing(f, K, P, sign, na, nb)
        A_ops = multi_parafermions(sign, m, a, f, K, indexing, conv)
        B_ops = A_ops if b == a else multi_parafermions(sign, m, b, f, K, indexing, conv)
        for I, A in sorted(A_ops.items()):
            for J, B in sorted(B_ops.items()):
                _exchange_assert(rep, f"{sign} {I} {J}", left * contract(A, B),
                                 contract(B, A, swap=True) * right)
    return rep.finish()
