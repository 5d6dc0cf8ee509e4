"""Frenkel-Jing currents, their iterated coproducts, and the defining-relation checker."""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from typing import Sequence

from .fock import BasisState, FockVector, basis_enumerate
from .report import RelationReport
from .scalar import ExactField, FieldParams, NumericField
from .vertexcalc import (FFVO, OpSum, ScalarSeries, apply_mode, contract, modes_in_window,
                         predicted_product, specialize, normal_product,
                         tensor)

LABELS = ("x+", "x-", "phi", "psi")
_ALIASES = {"x+": "x+", "xp": "x+", "x^+": "x+", "x-": "x-", "xm": "x-", "x^-": "x-",
            "phi": "phi", "φ": "phi", "psi": "psi", "ψ": "psi", "1": "id", "id": "id",
            "identity": "id"}

DELTA_PARSES = ("a", "b")
DEFAULT_DELTA_PARSE = "b"


def canonical_label(label: str) -> str:
    try:
        return _ALIASES[label]
    except KeyError:
        raise ValueError(f"unknown current label {label!r}") from None


def frenkel_jing(label: str, field, K: int = 8) -> FFVO:
    """Single-slot level-1 vertex operator for ``label``."""
    label = canonical_label(label)
    f = field
    if label == "id":
        return FFVO.identity(f, 1, K)
    if label == "x+":
        return FFVO.build(f, K, 1,
                          creation={0: lambda k: f.qpow(Fraction(-k, 2)) / f.qint(k)},
                          annihilation={0: lambda k: -f.qpow(Fraction(-k, 2)) / f.qint(k)},
                          shift=[1], zlaw=[1], zconst=1, label="x+")
    if label == "x-":
        return FFVO.build(f, K, 1,
                          creation={0: lambda k: -f.qpow(Fraction(k, 2)) / f.qint(k)},
                          annihilation={0: lambda k: f.qpow(Fraction(k, 2)) / f.qint(k)},
                          shift=[-1], zlaw=[-1], zconst=1, label="x-")
    d = f.qpow(1) - f.qpow(-1)
    if label == "phi":
        return FFVO.build(f, K, 1, creation={0: lambda k: -d}, qgrade=[-1], label="phi")
    return FFVO.build(f, K, 1, annihilation={0: lambda k: d}, qgrade=[1], label="psi")


def _slot_ops(field, K, m, placed: dict) -> FFVO:
    """Tensor product with ``placed[slot] = (label, q-exponent of the argument)``."""
    parts = []
    for j in range(m + 1):
        if j in placed:
            lab, c = placed[j]
            parts.append(frenkel_jing(lab, field, K).rescale(c))
        else:
            parts.append(frenkel_jing("id", field, K))
    return tensor(*parts) if len(parts) > 1 else parts[0]


def coproduct_term(sign: str, m: int, i: int, field, K: int = 8) -> FFVO:
    """The summand of the iterated coproduct of ``x^sign`` with the current on slot ``i``.

    Slots are numbered ``1..m+1`` from the left.  For ``x^+`` the slots to the
    left carry ``phi(z q^{j-1/2})``; for ``x^-`` the current sits at
    ``z q^{m+1-i}`` and the slots to the right carry ``psi(z q^{m+1-j+1/2})``.
    """
    if not 1 <= i <= m + 1:
        raise ValueError("slot index out of range")
    s = i - 1
    if sign == "+":
        placed = {j: ("phi", Fraction(2 * j + 1, 2)) for j in range(s)}
        placed[s] = ("x+", Fraction(s))
    elif sign == "-":
        placed = {j: ("psi", Fraction(2 * (m - j) + 1, 2)) for j in range(s + 1, m + 1)}
        placed[s] = ("x-", Fraction(m - s))
    else:
        raise ValueError("sign must be '+' or '-'")
    op = _slot_ops(field, K, m, placed)
    return op.relabel(f"X{sign}[{i}]")


def coproduct_current(sign: str, m: int, field, K: int = 8) -> OpSum:
    return OpSum.of([coproduct_term(sign, m, i, field, K) for i in range(1, m + 2)],
                    label=f"Delta^{m}(x{sign})")


def coproduct_cartan(label: str, m: int, field, K: int = 8) -> FFVO:
    """Iterated coproduct of ``phi`` or ``psi`` as one slotwise FFVO.

    Slot ``j`` (1-based) carries the argument ``z q^{w_j}`` with
    ``w_j = (2j - 2 - m)/2`` for ``phi`` and ``-(2j - 2 - m)/2`` for ``psi``.
    """
    label = canonical_label(label)
    if label not in ("phi", "psi"):
        raise ValueError("coproduct_cartan takes phi or psi")
    sgn = 1 if label == "phi" else -1
    placed = {j: (label, Fraction(sgn * (2 * j - m), 2)) for j in range(m + 1)}
    return _slot_ops(field, K, m, placed).relabel(f"Delta^{m}({label})")


def central_charge(m: int) -> int:
    return m + 1


def antipode_current(label: str, field, K: int = 8) -> FFVO:
    """Antipode images on one slot (central element 1)."""
    label = canonical_label(label)
    c = 1
    if label == "phi":
        return frenkel_jing("phi", field, K).normal_inverse().relabel("a(phi)")
    if label == "psi":
        return frenkel_jing("psi", field, K).normal_inverse().relabel("a(psi)")
    if label == "x+":
        left = frenkel_jing("phi", field, K).rescale(Fraction(-c, 2)).normal_inverse()
        right = frenkel_jing("x+", field, K).rescale(-c)
        out = specialize(normal_product(left, right), 0)
    elif label == "x-":
        left = frenkel_jing("x-", field, K).rescale(-c)
        right = frenkel_jing("psi", field, K).rescale(Fraction(-c, 2)).normal_inverse()
        out = specialize(normal_product(left, right), 0)
    else:
        raise ValueError("antipode of identity is identity")
    return out.scaled(-field.one()).relabel(f"a({label})")


def counit_value(label: str, field):
    label = canonical_label(label)
    return field.zero() if label in ("x+", "x-") else field.one()


# ---------------------------------------------------------------------------
# relation checking
# ---------------------------------------------------------------------------

def product_mode(X, Y, r, s, v: FockVector) -> FockVector:
    """``X_r Y_s v``."""
    return apply_mode(X, r, apply_mode(Y, s, v))


class Poly2:
    """Laurent polynomial in ``z, w`` with scalar coefficients: ``{(a, b): c}``."""

    def __init__(self, field, terms=None):
        self.field = field
        self.terms = dict(terms or {})

    @classmethod
    def linear(cls, field, cz, ew, cw=None):
        """``cz * z - cw * w`` where ``cw`` defaults to ``q^{ew}``."""
        f = field
        out = {(1, 0): cz}
        out[(0, 1)] = -(f.qpow(ew) if cw is None else cw)
        return cls(f, out)

    def __mul__(self, other: "Poly2") -> "Poly2":
        out = {}
        for (a, b), c in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (a + a2, b + b2)
                out[key] = out.get(key, self.field.zero()) + c * c2
        return Poly2(self.field, {k: v for k, v in out.items() if not self.field.is_zero(v)})


def _g_cleared(field, kind: str, c: int, parse: str):
    """Linear factors for the cleared ``phi x^{+-}`` / ``psi x^{+-}`` relations.

    Returns ``(P_left, P_right)`` with ``P_left * A(z) B(w) = P_right * B(w) A(z)``.
    The argument ``z/w q^{-+c/2}`` is read as ``(z/w) q^{...}`` under parse (b)
    and ``z/(w q^{...})`` under parse (a).
    """
    f = field
    h = Fraction(c, 2)
    flip = 1 if parse == "b" else -1
    if kind == "phi,x+":
        y = -h * flip    # y = (z/w) q^y
        # (z q^y - q^2 w) A B = (q^{2+y} z - w) B A
        return Poly2.linear(f, f.qpow(y), 2), Poly2.linear(f, f.qpow(2 + y), 0)
    if kind == "phi,x-":
        y = h * flip
        # g(y)^{-1}: (q^{2+y} z - w) A B = (q^y z - q^2 w) B A
        return Poly2.linear(f, f.qpow(2 + y), 0), Poly2.linear(f, f.qpow(y), 2)
    if kind == "psi,x+":
        y = -h * flip    # argument (w/z) q^y
        # (q^{2+y} w - z) A B = (q^y w - q^2 z) B A
        return (Poly2(f, {(0, 1): f.qpow(2 + y), (1, 0): -f.one()}),
                Poly2(f, {(0, 1): f.qpow(y), (1, 0): -f.qpow(2)}))
    if kind == "psi,x-":
        y = h * flip
        # (q^y w - q^2 z) A B = (q^{2+y} w - z) B A
        return (Poly2(f, {(0, 1): f.qpow(y), (1, 0): -f.qpow(2)}),
                Poly2(f, {(0, 1): f.qpow(2 + y), (1, 0): -f.one()}))
    raise ValueError(kind)


def _phipsi_cleared(field, c: int, parse: str):
    """``g(z/w q^{-c})/g(z/w q^{c})`` cleared: ``P_l phi(z) psi(w) = P_r psi(w) phi(z)``."""
    f = field
    sgn = 1 if parse == "b" else -1
    lo, hi = -c * sgn, c * sgn
    # g(y) = (q^2 y - 1)/(y - q^2);  ratio g(y_lo)/g(y_hi), y = (z/w) q^e
    # phi psi (q^2 y_lo - 1)(y_hi - q^2) ... multiply by w^2
    num = Poly2.linear(f, f.qpow(2 + lo), 0) * Poly2.linear(f, f.qpow(hi), 2)
    den = Poly2.linear(f, f.qpow(lo), 2) * Poly2.linear(f, f.qpow(2 + hi), 0)
    return den, num


def _cleared_terms(P: Poly2, X, Y, r, s, order: str, v: FockVector) -> FockVector:
    """Coefficient of ``z^{-r} w^{-s}`` of ``P(z,w) X(z) Y(w)`` (or ``Y(w) X(z)``) on ``v``."""
    out = FockVector(v.field)
    for (a, b), c in P.terms.items():
        rr, ss = r + a, s + b
        if order == "zw":
            t = apply_mode(X, rr, apply_mode(Y, ss, v))
        else:
            t = apply_mode(Y, ss, apply_mode(X, rr, v))
        out = out + t.scale(c)
    return out


def _compare_vectors(rep: RelationReport, fld, loc: str, lhs: FockVector, rhs: FockVector):
    states = set(lhs.terms) | set(rhs.terms)
    if not states:
        rep.compare(fld, loc, fld.zero(), fld.zero())
        return
    for st in sorted(states, key=str):
        rep.compare(fld, f"{loc} -> {st}", lhs.coefficient(st), rhs.coefficient(st))


def currents_for(m: int, field, K: int):
    """Level ``m+1`` realization: ``x^+, x^-`` (sums), ``phi, psi`` (one FFVO each)."""
    if m == 0:
        return {lab: frenkel_jing(lab, field, K) for lab in LABELS}
    return {"x+": coproduct_current("+", m, field, K), "x-": coproduct_current("-", m, field, K),
            "phi": coproduct_cartan("phi", m, field, K), "psi": coproduct_cartan("psi", m, field, K)}


def make_field(m: int, backend: str = "exact", q=None, params: FieldParams | None = None):
    params = params or FieldParams.for_level(m)
    if backend == "exact":
        return ExactField(params)
    if backend == "numeric":
        return NumericField(params, q) if q is not None else NumericField(params)
    raise ValueError(f"unknown backend {backend!r}")


def tail_order(N, W, extra: int = 2) -> int:
    """Tail order sufficient for exact mode actions in a degree-N, window-W check."""
    return int(N) + 2 * int(W) + 6 + extra


def check_defining_relations(m: int, sectors: Sequence[int], N, W, field=None,
                             K: int | None = None, delta_parse: str = DEFAULT_DELTA_PARSE,
                             record_values: bool = False,
                             relations: Sequence[str] | None = None) -> RelationReport:
    """All nine defining relations, mode by mode, on basis states of degree <= N."""
    if delta_parse not in DELTA_PARSES:
        raise ValueError("delta parse must be 'a' or 'b'")
    exact = ExactField(FieldParams.for_level(m))
    K = K or tail_order(N, W)
    ops = currents_for(m, exact, K)
    f = field or exact
    if f is not exact:
        ops = {k: v.to_field(f) for k, v in ops.items()}
    c = central_charge(m)
    basis = basis_enumerate(m, sectors, N)
    rep = RelationReport("defining_relations", {"m": m, "sectors": list(sectors), "N": N, "W": W,
                                                "K": K, "backend": f.name,
                                                "delta_parse": delta_parse,
                                                "basis_size": len(basis)})
    if record_values:
        rep.values = {}
    rep.notes["central_charge"] = c
    xp, xm, phi, psi = ops["x+"], ops["x-"], ops["phi"], ops["psi"]
    modes = range(-W, W + 1)
    one = f.one()
    want = set(relations) if relations else None

    def on(name):
        return want is None or name in want

    for b in basis:
        v = FockVector.basis(f, b)
        if on("phi0psi0"):
            lhs = apply_mode(phi, 0, apply_mode(psi, 0, v))
            _compare_vectors(rep, f, f"phi0psi0 {b}", lhs, v)
        for r in modes:
            for s in modes:
                loc = f"(r={r},s={s}) {b}"
                if on("phiphi"):
                    _compare_vectors(rep, f, "phiphi " + loc, product_mode(phi, phi, r, s, v),
                                     product_mode(phi, phi, s, r, v))
                if on("psipsi"):
                    _compare_vectors(rep, f, "psipsi " + loc, product_mode(psi, psi, r, s, v),
                                     product_mode(psi, psi, s, r, v))
                if on("phipsi"):
                    Pl, Pr = _phipsi_cleared(f, c, delta_parse)
                    _compare_vectors(rep, f, "phipsi " + loc,
                                     _cleared_terms(Pl, phi, psi, r, s, "zw", v),
                                     _cleared_terms(Pr, phi, psi, r, s, "wz", v))
                for kind, A, B in (("phi,x+", phi, xp), ("phi,x-", phi, xm),
                                   ("psi,x+", psi, xp), ("psi,x-", psi, xm)):
                    if not on(kind):
                        continue
                    Pl, Pr = _g_cleared(f, kind, c, delta_parse)
                    _compare_vectors(rep, f, f"{kind} " + loc,
                                     _cleared_terms(Pl, A, B, r, s, "zw", v),
                                     _cleared_terms(Pr, A, B, r, s, "wz", v))
                if on("x+x-"):
                    lhs = product_mode(xp, xm, r, s, v) - product_mode(xm, xp, s, r, v)
                    # delta(z q^{-c}/w) psi(w q^{c/2}) - delta(z q^{c}/w) phi(z q^{c/2})
                    lam1 = -c if delta_parse == "b" else c
                    lam2 = c if delta_parse == "b" else -c
                    k1 = f.qpow(-lam1 * r) * f.qpow(Fraction(-c, 2) * (r + s))
                    k2 = f.qpow(lam2 * s) * f.qpow(Fraction(-c, 2) * (r + s))
                    inv = one / (f.qpow(1) - f.qpow(-1))
                    rhs = (apply_mode(psi, r + s, v).scale(k1 * inv)
                           - apply_mode(phi, r + s, v).scale(k2 * inv))
                    _compare_vectors(rep, f, "x+x- " + loc, lhs, rhs)
                for sgn, X in (("+", xp), ("-", xm)):
                    if not on("x" + sgn + "x" + sgn):
                        continue
                    e = 2 if sgn == "+" else -2
                    # (z - q^e w) X(z) X(w) = (q^e z - w) X(w) X(z)
                    Pl = Poly2(f, {(1, 0): one, (0, 1): -f.qpow(e)})
                    Pr = Poly2(f, {(1, 0): f.qpow(e), (0, 1): -one})
                    _compare_vectors(rep, f, f"x{sgn}x{sgn} " + loc,
                                     _cleared_terms(Pl, X, X, r, s, "zw", v),
                                     _cleared_terms(Pr, X, X, r, s, "wz", v))
    return rep.finish()


# ---------------------------------------------------------------------------
# operator product expansions of the level-one currents
# ---------------------------------------------------------------------------

OPE_READINGS = ("resolved", "stated")


def stated_ope(field, K: int, reading: str = "resolved") -> dict:
    """Contraction functions of the four basic products, series in ``right/left``.

    ``x+ phi`` as stated has its pole at ``q^{5/2}``; the resolved reading
    moves it to ``q^{3/2}``, the only choice compatible with
    ``phi x+ phi^-1 = g x+``.  ``psi x-`` is stated with equal numerator and
    denominator; the resolved reading is the reciprocal of the exchange
    ratio ``(x q^{1/2} - q^2)/(x q^{5/2} - 1)`` that follows it.
    """
    if reading not in OPE_READINGS:
        raise ValueError(f"reading must be one of {OPE_READINGS}")
    f = field
    one = ScalarSeries.one(f, K)
    h = Fraction(1, 2)
    x_phi_pole = Fraction(3, 2) if reading == "resolved" else Fraction(5, 2)
    out = {
        ("x+", "x+"): replace(one, closed=((-2, 1), (0, 1)), zpow=Fraction(2)),
        ("x-", "x-"): replace(one, closed=((0, 1), (2, 1)), zpow=Fraction(2)),
        ("x+", "phi"): replace(one, closed=((-5 * h, 1), (x_phi_pole, -1))),
    }
    if reading == "resolved":
        out[("psi", "x-")] = replace(one, closed=((-3 * h, -1), (5 * h, 1)), coeff=f.qpow(-2))
    else:
        out[("psi", "x-")] = one
    return out


def check_ope(N: int = 4, W: int = 2, field=None, K: int | None = None,
              reading: str = "resolved", sectors: Sequence[int] = (0, 1),
              record_values: bool = False) -> RelationReport:
    """Closed-form contractions plus the raw-product oracle for every current pair.

    For each pair ``A, B`` and each basis state of degree ``<= N`` the modes
    ``A_r B_s`` inside the window are compared with the reconstruction from
    the contraction and the normal-ordered pair.
    """
    exact = ExactField(FieldParams.for_level(0))
    K = K or tail_order(N, W)
    f = field or exact
    ops = {lab: frenkel_jing(lab, exact, K) for lab in LABELS}
    rep = RelationReport("ope", {"N": N, "W": W, "K": K, "backend": f.name, "reading": reading,
                                 "sectors": list(sectors)})
    if record_values:
        rep.values = {}
    for (a, b), want in stated_ope(exact, K, reading).items():
        got = contract(ops[a], ops[b])
        ok, detail = got.same_function(want)
        rep.record(f"closed form {a} {b}", ok and got.is_closed(), got.to_str(),
                   f"{want.to_str()} {detail}".strip())
        rep.notes[f"{a} {b}"] = got.to_str()
    if f is not exact:
        ops = {k: v.to_field(f) for k, v in ops.items()}
    for sec in sectors:
        for b in basis_enumerate(0, [sec], N):
            v = FockVector.basis(f, b)
            for a in LABELS:
                for c in LABELS:
                    A, B = ops[a], ops[c]
                    for s in modes_in_window(B, b, W):
                        Bv = apply_mode(B, s, v)
                        rs = set()
                        for st, _ in Bv:
                            rs.update(modes_in_window(A, st, W))
                        for r in sorted(rs or modes_in_window(A, b, W)):
                            _compare_vectors(rep, f, f"{a}_{r} {c}_{s} {b}",
                                             product_mode(A, B, r, s, v),
                                             predicted_product(A, B, r, s, b))
    return rep.finish()


def correlation(ops: Sequence, b_in: BasisState, b_out: BasisState, window) -> dict:
    """``<out| A_1(z_1) ... A_n(z_n) |in>`` as ``{(p_1, ..., p_n): scalar}``.

    ``window`` is an iterable of admissible modes used for every factor.
    """
    if not ops:
        f = None
        return {(): 1 if b_in == b_out else 0}
    f = ops[0].field
    modes = list(window)
    out = {}

    def rec(i, vec, tup):
        if i < 0:
            val = vec.coefficient(b_out)
            if not f.is_zero(val):
                out[tuple(reversed(tup))] = val
            return
        for p in modes:
            w = apply_mode(ops[i], p, vec)
            if not w.is_zero():
                rec(i - 1, w, tup + (p,))

    rec(len(ops) - 1, FockVector.basis(f, b_in), ())
    return out
