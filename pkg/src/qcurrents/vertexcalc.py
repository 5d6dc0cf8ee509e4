"""Normal-ordered free-field vertex operators (FFVOs).

An FFVO on ``m+1`` slots is the operator::

    prefactor * zeta^phase
      * exp(sum_{j,k} cre[j][k] a^{(j)}_{-k} z^k)
      * exp(sum_{j,k} ann[j][k] a^{(j)}_{k} z^{-k})
      * prod_j e^{shift_j alpha^{(j)}} z^{zconst + sum_j zlaw_j d^{(j)}} q^{sum_j qgrade_j d^{(j)}}

where ``d^{(j)}`` reads the charge ``2 n_j + i_j`` of the state it acts on
(the lattice factors to the right of ``e^{...}`` act first).  Tails are stored
for ``k = 1..K``.

Products of two FFVOs in variables ``z`` (left) and ``w`` (right) are
``C(z, w) :A(z) B(w):`` with ``C`` a :class:`ScalarSeries` in ``x = w/z``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .fock import BasisState, FockVector, heis_bracket
from .report import RelationReport
from .scalar import ExactField, NumericField, Scalar, exp_series


class PoleAtSpecialization(ZeroDivisionError):
    """Specializing ``w = q^c z`` hits a pole of the contraction."""


class TailTooShort(ValueError):
    """A mode computation needs tail coefficients beyond the stored order."""


class ZeroOperator:
    """Distinguished value: a specialization whose contraction vanishes."""

    __slots__ = ("nslots", "reason")

    def __init__(self, nslots: int, reason: str = ""):
        self.nslots = nslots
        self.reason = reason

    def __repr__(self):
        return f"ZeroOperator({self.reason})" if self.reason else "ZeroOperator()"

    def __bool__(self):
        return False


def is_zero_operator(x) -> bool:
    return isinstance(x, ZeroOperator)


def _frac_tuple(xs) -> tuple:
    return tuple(Fraction(x) for x in xs)


@dataclass(frozen=True, eq=False)
class FFVO:
    field: object
    creation: tuple
    annihilation: tuple
    shift: tuple
    qgrade: tuple
    zlaw: tuple
    zconst: Fraction
    prefactor: object
    phase: int = 0
    label: str = ""
    truncated: bool = False
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    # -- construction -----------------------------------------------------
    @classmethod
    def identity(cls, field, nslots: int, K: int) -> "FFVO":
        z = field.zero()
        tails = tuple(tuple(z for _ in range(K)) for _ in range(nslots))
        zeros = (Fraction(0),) * nslots
        return cls(field, tails, tails, zeros, zeros, zeros, Fraction(0), field.one(), 0, "1")

    @classmethod
    def build(cls, field, K: int, nslots: int, *, creation=None, annihilation=None,
              shift=None, qgrade=None, zlaw=None, zconst=0, prefactor=None, phase=0,
              label="") -> "FFVO":
        """``creation``/``annihilation`` map ``slot -> callable(k) -> scalar``."""
        z = field.zero()

        def tails(spec):
            spec = spec or {}
            return tuple(tuple(spec[j](k) if j in spec else z for k in range(1, K + 1))
                         for j in range(nslots))

        zeros = (Fraction(0),) * nslots
        return cls(field, tails(creation), tails(annihilation),
                   _frac_tuple(shift) if shift is not None else zeros,
                   _frac_tuple(qgrade) if qgrade is not None else zeros,
                   _frac_tuple(zlaw) if zlaw is not None else zeros,
                   Fraction(zconst), prefactor if prefactor is not None else field.one(),
                   phase, label)

    # -- basic data -------------------------------------------------------
    @property
    def nslots(self) -> int:
        return len(self.shift)

    @property
    def K(self) -> int:
        return len(self.creation[0]) if self.creation else 0

    def relabel(self, label: str) -> "FFVO":
        return replace(self, label=label, _cache={})

    def has_tails(self) -> bool:
        f = self.field
        return any(not f.is_zero(c) for row in self.creation + self.annihilation for c in row)

    # -- transformations --------------------------------------------------
    def rescale(self, c) -> "FFVO":
        """Substitute ``z -> z q^c`` in the argument."""
        c = Fraction(c)
        if c == 0:
            return self
        f = self.field
        cre = tuple(tuple(a * f.qpow(c * k) for k, a in enumerate(row, 1)) for row in self.creation)
        ann = tuple(tuple(a * f.qpow(-c * k) for k, a in enumerate(row, 1)) for row in self.annihilation)
        qg = tuple(u + c * t for u, t in zip(self.qgrade, self.zlaw))
        return replace(self, creation=cre, annihilation=ann, qgrade=qg,
                       prefactor=self.prefactor * f.qpow(c * self.zconst), _cache={},
                       label=f"{self.label}(zq^{c})" if self.label else "")

    def normal_inverse(self) -> "FFVO":
        """Operator ``:A^{-1}:`` with every exponent negated."""
        neg = lambda rows: tuple(tuple(-a for a in row) for row in rows)  # noqa: E731
        return replace(self, creation=neg(self.creation), annihilation=neg(self.annihilation),
                       shift=tuple(-x for x in self.shift), qgrade=tuple(-x for x in self.qgrade),
                       zlaw=tuple(-x for x in self.zlaw), zconst=-self.zconst,
                       prefactor=self.field.one() / self.prefactor, phase=-self.phase,
                       label=f"{self.label}^-1" if self.label else "", _cache={})

    def scaled(self, c) -> "FFVO":
        return replace(self, prefactor=self.prefactor * c, _cache={})

    def to_field(self, target) -> "FFVO":
        """Re-express all scalars in another backend (exact -> numeric)."""
        src = self.field
        conv = (lambda a: src.to_complex(a, target.q)) if isinstance(target, NumericField) else (lambda a: a)
        rows = lambda rs: tuple(tuple(conv(a) for a in r) for r in rs)  # noqa: E731
        return replace(self, field=target, creation=rows(self.creation),
                       annihilation=rows(self.annihilation), prefactor=conv(self.prefactor),
                       _cache={})

    def extended(self, K: int) -> "FFVO":
        """Zero-pad or cut tails to order K (only valid when padding is exact)."""
        if K == self.K:
            return self
        z = self.field.zero()
        fix = lambda rs: tuple(tuple(r[:K]) + (z,) * max(0, K - len(r)) for r in rs)  # noqa: E731
        return replace(self, creation=fix(self.creation), annihilation=fix(self.annihilation),
                       _cache={})

    # -- display ----------------------------------------------------------
    def describe(self) -> dict:
        f = self.field
        return {
            "label": self.label,
            "prefactor": f.fmt(self.prefactor),
            "phase": self.phase,
            "creation": [[f.fmt(a) for a in row] for row in self.creation],
            "annihilation": [[f.fmt(a) for a in row] for row in self.annihilation],
            "shift": [str(x) for x in self.shift],
            "qgrade": [str(x) for x in self.qgrade],
            "zlaw": [str(x) for x in self.zlaw],
            "zconst": str(self.zconst),
            "truncated": self.truncated,
        }

    def __repr__(self):
        return f"FFVO({self.label or '?'}, slots={self.nslots}, K={self.K})"


def tensor(*ops: FFVO) -> FFVO:
    """Slot-concatenation ``A (x) B (x) ...`` of operators in the same variable."""
    f = ops[0].field
    K = min(o.K for o in ops)
    pref = f.one()
    for o in ops:
        pref = pref * o.prefactor
    return FFVO(f,
                sum((tuple(r[:K] for r in o.creation) for o in ops), ()),
                sum((tuple(r[:K] for r in o.annihilation) for o in ops), ()),
                sum((o.shift for o in ops), ()), sum((o.qgrade for o in ops), ()),
                sum((o.zlaw for o in ops), ()), sum((o.zconst for o in ops), Fraction(0)),
                pref, sum(o.phase for o in ops), " (x) ".join(o.label for o in ops),
                any(o.truncated for o in ops))


def normal_compose(*ops: FFVO, spacings: Sequence | None = None) -> FFVO:
    """``:A_1(z q^{c_1}) A_2(z q^{c_2}) ...:`` without any contraction factor."""
    if spacings is None:
        spacings = [0] * len(ops)
    ops = [o.rescale(c) for o, c in zip(ops, spacings)]
    f = ops[0].field
    K = min(o.K for o in ops)
    n = ops[0].nslots
    cre = tuple(tuple(_sum(f, (o.creation[j][k] for o in ops)) for k in range(K)) for j in range(n))
    ann = tuple(tuple(_sum(f, (o.annihilation[j][k] for o in ops)) for k in range(K)) for j in range(n))
    pref = f.one()
    for o in ops:
        pref = pref * o.prefactor
    return FFVO(f, cre, ann,
                tuple(sum((o.shift[j] for o in ops), Fraction(0)) for j in range(n)),
                tuple(sum((o.qgrade[j] for o in ops), Fraction(0)) for j in range(n)),
                tuple(sum((o.zlaw[j] for o in ops), Fraction(0)) for j in range(n)),
                sum((o.zconst for o in ops), Fraction(0)), pref,
                sum(o.phase for o in ops), ":" + " ".join(o.label for o in ops) + ":",
                any(o.truncated for o in ops))


def normal_quotient(A: FFVO, B: FFVO) -> FFVO:
    """``:A B^{-1}:`` (tailwise and latticewise subtraction, prefactors divided)."""
    out = normal_compose(A, B.normal_inverse())
    return replace(out, label=f"{A.label}/{B.label}")


def _sum(f, xs):
    acc = f.zero()
    for x in xs:
        acc = acc + x
    return acc


# ---------------------------------------------------------------------------
# contraction series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarSeries:
    """``phase * coeff * z^zpow w^wpow * prod (1 - q^e x)^n * exp(sum_k residual[k-1] x^k)``.

    ``x`` is ``w/z`` when ``orientation == "w/z"`` and ``z/w`` otherwise.
    ``residual`` holds the log-coefficients that closed-form recognition could
    not absorb; an all-zero residual means the series is a finite product.
    """

    field: object
    closed: tuple
    coeff: object
    zpow: Fraction
    wpow: Fraction
    residual: tuple
    orientation: str = "w/z"
    phase: int = 0

    @classmethod
    def one(cls, field, K: int, orientation="w/z") -> "ScalarSeries":
        return cls(field, (), field.one(), Fraction(0), Fraction(0),
                   tuple(field.zero() for _ in range(K)), orientation)

    @classmethod
    def from_gammas(cls, field, gammas: Sequence, orientation="w/z", coeff=None,
                    zpow=0, wpow=0, phase=0) -> "ScalarSeries":
        closed, resid = recognize_closed_form(gammas, field)
        return cls(field, closed, field.one() if coeff is None else coeff, Fraction(zpow),
                   Fraction(wpow), resid, orientation, phase)

    @classmethod
    def linear(cls, field, K: int, a, b, orientation="w/z") -> "ScalarSeries":
        """``q^a z - q^b w`` (orientation w/z) or ``q^a w - q^b z`` (z/w)."""
        a, b = Fraction(a), Fraction(b)
        base = cls.one(field, K, orientation)
        pw = (Fraction(1), Fraction(0)) if orientation == "w/z" else (Fraction(0), Fraction(1))
        return replace(base, closed=((b - a, 1),), coeff=field.qpow(a), zpow=pw[0], wpow=pw[1])

    @property
    def K(self) -> int:
        return len(self.residual)

    def is_closed(self) -> bool:
        return all(self.field.is_zero(g) for g in self.residual)

    def is_trivial(self) -> bool:
        return (not self.closed and self.is_closed() and self.zpow == 0 and self.wpow == 0
                and self.phase % self.field.params.L == 0
                and self.field.equal(self.coeff, self.field.one()))

    def __mul__(self, other: "ScalarSeries") -> "ScalarSeries":
        if self.orientation != other.orientation:
            other = other.reoriented(self.orientation)
        mult = Counter()
        for e, n in self.closed + other.closed:
            mult[e] += n
        K = min(self.K, other.K)
        resid = [self.residual[k] + other.residual[k] for k in range(K)]
        extra, resid = recognize_closed_form(resid, self.field)
        for e, n in extra:
            mult[e] += n
        closed = tuple(sorted((e, n) for e, n in mult.items() if n != 0))
        return ScalarSeries(self.field, closed, self.coeff * other.coeff, self.zpow + other.zpow,
                            self.wpow + other.wpow, tuple(resid), self.orientation,
                            self.phase + other.phase)

    def inverse(self) -> "ScalarSeries":
        return ScalarSeries(self.field, tuple((e, -n) for e, n in self.closed),
                            self.field.one() / self.coeff, -self.zpow, -self.wpow,
                            tuple(-g for g in self.residual), self.orientation, -self.phase)

    def __truediv__(self, other):
        return self * other.inverse()

    def rescale(self, a=0, b=0) -> "ScalarSeries":
        """Substitute ``z -> z q^a`` and ``w -> w q^b``."""
        a, b = Fraction(a), Fraction(b)
        f = self.field
        d = (b - a) if self.orientation == "w/z" else (a - b)
        return ScalarSeries(f, tuple((e + d, n) for e, n in self.closed),
                            self.coeff * f.qpow(a * self.zpow + b * self.wpow), self.zpow, self.wpow,
                            tuple(g * f.qpow(d * k) for k, g in enumerate(self.residual, 1)),
                            self.orientation, self.phase)

    def swap_variables(self) -> "ScalarSeries":
        """Rename ``z <-> w`` (the same function read with arguments exchanged)."""
        other = "z/w" if self.orientation == "w/z" else "w/z"
        return replace(self, zpow=self.wpow, wpow=self.zpow, orientation=other)

    def reoriented(self, orientation: str) -> "ScalarSeries":
        """Rewrite as a rational function of the reciprocal ratio.

        ``(1 - q^e y)^n = (-q^e)^n y^n (1 - q^{-e}/y)^n``; only valid when the
        residual vanishes (otherwise the two expansions differ).
        """
        if orientation == self.orientation:
            return self
        if not self.is_closed():
            raise ValueError("cannot re-expand a non-closed series in the opposite ratio")
        f = self.field
        coeff = self.coeff
        zp, wp = self.zpow, self.wpow
        closed = []
        for e, n in self.closed:
            coeff = coeff * (-f.qpow(e)) ** n
            if self.orientation == "w/z":  # y = w/z
                wp += n
                zp -= n
            else:
                zp += n
                wp -= n
            closed.append((-e, n))
        return ScalarSeries(f, tuple(sorted(closed)), coeff, zp, wp, self.residual, orientation,
                            self.phase)

    def coefficients(self, n_max: int) -> list:
        """Series coefficients (in the orientation ratio) of everything but the monomial."""
        f = self.field
        series = [f.one()] + [f.zero()] * n_max
        for e, n in self.closed:
            series = _mul_trunc(f, series, _binomial_series(f, e, n, n_max))
        if not self.is_closed():
            if n_max > self.K:
                raise TailTooShort(f"series needed to order {n_max}, have {self.K}")
            ex = exp_series(self.residual, f, n_max).coeffs
            series = _mul_trunc(f, series, list(ex))
        scale = self.coeff * (f.zeta(self.phase) if self.phase else f.one())
        return [c * scale for c in series]

    def value_at(self, c):
        """Evaluate at ratio ``q^c``: returns ``(value, truncated)`` or raises."""
        f = self.field
        c = Fraction(c)
        val = self.coeff * (f.zeta(self.phase) if self.phase else f.one())
        for e, n in self.closed:
            if e + c == 0:
                if n > 0:
                    return None, False
                raise PoleAtSpecialization(f"factor (1 - q^{e} x)^{n} at x = q^{c}")
            val = val * (f.one() - f.qpow(e + c)) ** n
        truncated = False
        if not self.is_closed():
            ex = exp_series(self.residual, f, self.K).coeffs
            acc = f.zero()
            for k, a in enumerate(ex):
                acc = acc + a * f.qpow(c * k)
            val = val * acc
            truncated = True
        return val, truncated

    def same_function(self, other: "ScalarSeries") -> tuple:
        """Compare as rational functions (closed) or as truncated series.

        Returns ``(equal, detail)``.  Closed series are compared after moving to
        a common orientation; non-closed ones must share orientation.
        """
        f = self.field
        a, b = self, other
        if a.orientation != b.orientation:
            if b.is_closed():
                b = b.reoriented(a.orientation)
            elif a.is_closed():
                a = a.reoriented(b.orientation)
            else:
                return False, "orientation mismatch with non-closed series"
        q = a / b
        if not q.is_closed():
            for k, g in enumerate(q.residual, 1):
                if not f.is_zero(g):
                    return False, f"log-coefficient {k} differs: {f.fmt(g)}"
        if q.closed:
            return False, f"closed factors differ: {q.closed}"
        if q.zpow != 0 or q.wpow != 0:
            return False, f"monomials differ by z^{q.zpow} w^{q.wpow}"
        L = f.params.L
        if not f.equal(q.coeff * f.zeta(q.phase % L), f.one()):
            return False, f"constants differ by factor {f.fmt(q.coeff * f.zeta(q.phase % L))}"
        return True, ""

    def to_str(self) -> str:
        f = self.field
        v1, v2 = ("w", "z") if self.orientation == "w/z" else ("z", "w")
        parts = []
        c = self.coeff
        if not f.equal(c, f.one()):
            parts.append(f"({f.fmt(c)})")
        if self.phase:
            parts.append(f"zeta^{self.phase}")
        if self.zpow:
            parts.append(f"z^{self.zpow}")
        if self.wpow:
            parts.append(f"w^{self.wpow}")
        for e, n in self.closed:
            fac = "(1 - x)" if e == 0 else f"(1 - q^{e} x)"
            parts.append(fac if n == 1 else f"{fac}^{n}")
        if not self.is_closed():
            parts.append("exp(" + " + ".join(f"({f.fmt(g)}) x^{k}"
                                            for k, g in enumerate(self.residual, 1)
                                            if not f.is_zero(g)) + ")")
        body = " * ".join(parts) if parts else "1"
        return f"{body}  [x = {v1}/{v2}]"

    __str__ = to_str


def _mul_trunc(f, a, b):
    n = min(len(a), len(b))
    out = []
    for i in range(n):
        acc = f.zero()
        for j in range(i + 1):
            if not f.is_zero(a[j]) and not f.is_zero(b[i - j]):
                acc = acc + a[j] * b[i - j]
        out.append(acc)
    return out


def _binomial_series(f, e, n, n_max):
    """``(1 - q^e x)^n`` to order ``n_max`` (n of either sign)."""
    out = [f.one()]
    coef = Fraction(1)
    for k in range(1, n_max + 1):
        coef = coef * (n - k + 1) / k
        out.append(f.qpow(e * k) * ((-1) ** k * coef))
    return out


def recognize_closed_form(gammas: Sequence, field) -> tuple:
    """Split ``exp(sum gamma_k x^k)`` into ``prod (1 - q^e x)^n`` plus remainder.

    Succeeds (returning an all-zero remainder) when ``-k gamma_k`` is the same
    integer combination ``sum n_i q^{e_i k}`` for every stored ``k``.  Only the
    exact backend can recognize; numeric input is returned unchanged.
    """
    K = len(gammas)
    zero_resid = tuple(field.zero() for _ in range(K))
    if all(field.is_zero(g) for g in gammas):
        return (), zero_resid
    if not isinstance(field, ExactField) or K == 0:
        return (), tuple(gammas)
    p1 = -gammas[0]
    if not isinstance(p1, Scalar) or not p1.is_rational_laurent():
        return (), tuple(gammas)
    terms = p1.laurent_terms()
    if any(c.denominator != 1 for c in terms.values()):
        return (), tuple(gammas)
    D = field.params.D
    multiset = {Fraction(v, D): int(c) for v, c in terms.items()}
    for k in range(2, K + 1):
        pred = field.zero()
        for e, n in multiset.items():
            pred = pred + field.qpow(e * k) * n
        if not field.equal(gammas[k - 1] * (-k), pred):
            return (), tuple(gammas)
    return tuple(sorted(multiset.items())), zero_resid


def contract(A: FFVO, B: FFVO, swap: bool = False) -> ScalarSeries:
    """Contraction of ``A(z) B(w)`` (or of ``A(w) B(z)`` when ``swap``).

    The series variable is ``right/left`` and the monomial sits on the left
    variable.
    """
    if A.nslots != B.nslots:
        raise ValueError("slot structures differ")
    f = A.field
    K = min(A.K, B.K)
    gam = []
    for k in range(1, K + 1):
        acc = f.zero()
        for j in range(A.nslots):
            a, b = A.annihilation[j][k - 1], B.creation[j][k - 1]
            if not f.is_zero(a) and not f.is_zero(b):
                acc = acc + a * b
        gam.append(acc * heis_bracket(f, k) if not f.is_zero(acc) else f.zero())
    mono = sum((2 * t * mu for t, mu in zip(A.zlaw, B.shift)), Fraction(0))
    qexp = sum((2 * u * mu for u, mu in zip(A.qgrade, B.shift)), Fraction(0))
    orient = "z/w" if swap else "w/z"
    zp, wp = (Fraction(0), mono) if swap else (mono, Fraction(0))
    return ScalarSeries.from_gammas(f, gam, orient, f.qpow(qexp), zp, wp)


@dataclass(frozen=True)
class TwoVarProduct:
    left: FFVO
    right: FFVO
    contraction: ScalarSeries


def normal_product(A: FFVO, B: FFVO) -> TwoVarProduct:
    return TwoVarProduct(A, B, contract(A, B))


def specialize(P: TwoVarProduct, c) -> FFVO | ZeroOperator:
    """Set ``w = q^c z`` in ``A(z) B(w)``; the result is one FFVO in ``z``."""
    c = Fraction(c)
    S = P.contraction
    val, truncated = S.value_at(c)
    if val is None:
        zeros = [e for e, n in S.closed if e + c == 0]
        return ZeroOperator(P.left.nslots, f"factor (1 - q^{zeros[0]} x) at x = q^{c}")
    f = P.left.field
    val = val * f.qpow(c * S.wpow)
    out = normal_compose(P.left, P.right, spacings=[0, c])
    return replace(out, prefactor=out.prefactor * val, zconst=out.zconst + S.zpow + S.wpow,
                   truncated=out.truncated or truncated,
                   label=f"{P.left.label}(z){P.right.label}(zq^{c})")


class IndeterminateProduct(ArithmeticError):
    """A vanishing factor meets a pole at the same specialization."""


def spaced_product(ops: Sequence[FFVO], spacings: Sequence) -> FFVO | ZeroOperator:
    """``A_1(z q^{c_1}) A_2(z q^{c_2}) ...`` (left to right) as one FFVO in ``z``.

    Every pair ``a < b`` contributes its contraction evaluated at
    ``x = q^{c_b - c_a}``.  Zeros and poles are counted over all pairs first,
    so a zero is only reported when nothing cancels it.
    """
    spacings = [Fraction(c) for c in spacings]
    n = len(ops)
    f = ops[0].field
    order = 0
    hits = []
    pairs = []
    for a in range(n):
        for b in range(a + 1, n):
            C = contract(ops[a], ops[b])
            d = spacings[b] - spacings[a]
            for e, mult in C.closed:
                if e + d == 0:
                    order += mult
                    hits.append(f"pair ({a + 1},{b + 1}): (1 - q^{e} x)^{mult} at x = q^{d}")
            pairs.append((a, b, C, d))
    if order > 0:
        return ZeroOperator(ops[0].nslots, "; ".join(hits))
    if order < 0:
        raise PoleAtSpecialization("; ".join(hits))
    if hits:
        raise IndeterminateProduct("; ".join(hits))
    out = normal_compose(*ops, spacings=spacings)
    pref = out.prefactor
    zc = out.zconst
    truncated = out.truncated
    for a, b, C, d in pairs:
        val, trunc = C.value_at(d)
        truncated = truncated or trunc
        pref = pref * val * f.qpow(spacings[a] * C.zpow + spacings[b] * C.wpow)
        zc += C.zpow + C.wpow
    label = " ".join(f"{o.label}(zq^{c})" for o, c in zip(ops, spacings))
    return replace(out, prefactor=pref, zconst=zc, truncated=truncated, label=label)


# ---------------------------------------------------------------------------
# equality
# ---------------------------------------------------------------------------

def ffvo_equal(A, B, K_max: int | None = None, check_id: str = "ffvo_equal",
               report: RelationReport | None = None, prefix: str = "") -> RelationReport:
    rep = report if report is not None else RelationReport(check_id)
    if is_zero_operator(A) or is_zero_operator(B):
        rep.record(prefix + "zero-operator", is_zero_operator(A) and is_zero_operator(B),
                   repr(A), repr(B))
        return rep
    f = A.field
    K = min(A.K, B.K) if K_max is None else min(K_max, A.K, B.K)
    rep.truncated = rep.truncated or A.truncated or B.truncated
    for name in ("shift", "qgrade", "zlaw"):
        for j, (x, y) in enumerate(zip(getattr(A, name), getattr(B, name))):
            rep.record(f"{prefix}{name}[{j + 1}]", x == y, x, y)
    rep.record(prefix + "zconst", A.zconst == B.zconst, A.zconst, B.zconst)
    L = f.params.L
    pa = A.prefactor * f.zeta(A.phase % L) if A.phase % L else A.prefactor
    pb = B.prefactor * f.zeta(B.phase % L) if B.phase % L else B.prefactor
    rep.compare(f, prefix + "prefactor", pa, pb)
    for name, ta, tb in (("creation", A.creation, B.creation),
                         ("annihilation", A.annihilation, B.annihilation)):
        for j in range(A.nslots):
            for k in range(K):
                rep.compare(f, f"{prefix}{name}[{j + 1}][k={k + 1}]", ta[j][k], tb[j][k])
    return rep


def is_identity(A: FFVO) -> bool:
    f = A.field
    return (not A.has_tails() and not any(A.shift) and not any(A.qgrade) and not any(A.zlaw)
            and A.zconst == 0 and A.phase % f.params.L == 0 and f.equal(A.prefactor, f.one()))


# ---------------------------------------------------------------------------
# action on Fock vectors
# ---------------------------------------------------------------------------

class OpSum:
    """Finite sum ``sum_i c_i A_i`` of FFVOs in one variable."""

    def __init__(self, terms: Iterable, label: str = ""):
        self.terms = [(c, A) for c, A in terms]
        self.label = label

    @classmethod
    def of(cls, ops: Iterable[FFVO], label: str = "") -> "OpSum":
        ops = list(ops)
        return cls([(ops[0].field.one(), A) for A in ops], label)

    @property
    def field(self):
        return self.terms[0][1].field

    @property
    def nslots(self):
        return self.terms[0][1].nslots

    def rescale(self, c) -> "OpSum":
        return OpSum([(a, A.rescale(c)) for a, A in self.terms], self.label)

    def to_field(self, target) -> "OpSum":
        src = self.field
        conv = (lambda a: src.to_complex(a, target.q)) if isinstance(target, NumericField) else (lambda a: a)
        return OpSum([(conv(a), A.to_field(target)) for a, A in self.terms], self.label)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self):
        return f"OpSum({self.label or len(self.terms)})"


def _components(op):
    if isinstance(op, OpSum):
        return op.terms
    return [(None, op)]


def base_exponent(A: FFVO, b: BasisState) -> Fraction:
    """z-exponent of the lattice part of ``A(z)`` on ``b``."""
    return A.zconst + sum((t * b.charge(j) for j, t in enumerate(A.zlaw)), Fraction(0))


def mode_classes(op, b: BasisState) -> set:
    """Residues mod 1 of the modes ``p`` that can act nontrivially on ``b``."""
    return {(-base_exponent(A, b)) % 1 for _, A in _components(op)}


def modes_in_window(op, b: BasisState, W) -> list:
    """All admissible modes ``p`` with ``|p| <= W`` for ``op`` acting on ``b``."""
    out = set()
    for r in mode_classes(op, b):
        p = r - math.floor(W) - 1
        while p <= W:
            if abs(p) <= W:
                out.add(p)
            p += 1
    return sorted(out)


def _annihilation_terms(A: FFVO, b: BasisState):
    f = A.field
    cache = A._cache.setdefault("ann", {})
    key = b.parts
    got = cache.get(key)
    if got is not None:
        return got
    per_slot = []
    for j, lam in enumerate(b.parts):
        opts = [(Counter(), 0, f.one())]
        for k, n in Counter(lam).items():
            if k > A.K:
                if any(not f.is_zero(a) for a in A.annihilation[j]):
                    raise TailTooShort(f"state part {k} exceeds tail order {A.K}")
                continue
            a = A.annihilation[j][k - 1]
            if f.is_zero(a):
                continue
            base = a * heis_bracket(f, k)
            new = []
            for rem, deg, c in opts:
                pw = f.one()
                for e in range(n + 1):
                    r2 = rem.copy()
                    if e:
                        r2[k] += e
                    new.append((r2, deg + k * e, c * pw * math.comb(n, e)))
                    pw = pw * base
            opts = new
        per_slot.append([(_remove(lam, rem), deg, c) for rem, deg, c in opts])
    out = []
    for combo in product(*per_slot):
        parts = tuple(x[0] for x in combo)
        deg = sum(x[1] for x in combo)
        c = f.one()
        for x in combo:
            c = c * x[2]
        out.append((parts, deg, c))
    cache[key] = out
    return out


def _remove(lam: tuple, rem: Counter) -> tuple:
    if not rem:
        return lam
    left = Counter(lam)
    left.subtract(rem)
    out = []
    for k, n in left.items():
        out.extend([k] * n)
    return tuple(sorted(out, reverse=True))


def creation_terms(A: FFVO, d: int, which: str = "creation"):
    """Degree-``d`` part of ``exp(sum cre[j][k] y_{jk})``: list of (per-slot additions, coeff)."""
    f = A.field
    cache = A._cache.setdefault(which, {})
    got = cache.get(d)
    if got is not None:
        return got
    tails = getattr(A, which)
    if d > A.K and any(not f.is_zero(a) for row in tails for a in row):
        raise TailTooShort(f"creation degree {d} exceeds tail order {A.K}")
    gens = [(j, k, tails[j][k - 1]) for j in range(A.nslots) for k in range(1, min(d, A.K) + 1)
            if not f.is_zero(tails[j][k - 1])]
    out = []

    def rec(i, remaining, counts, coeff):
        if remaining == 0:
            adds = [[] for _ in range(A.nslots)]
            for (j, k), n in counts.items():
                adds[j].extend([k] * n)
            out.append((tuple(tuple(a) for a in adds), coeff))
            return
        if i == len(gens):
            return
        j, k, a = gens[i]
        # use generator i zero or more times
        pw = f.one()
        n = 0
        while n * k <= remaining:
            if n:
                counts[(j, k)] = n
            rec(i + 1, remaining - n * k, counts, coeff * pw / math.factorial(n) if n else coeff)
            n += 1
            pw = pw * a
        counts.pop((j, k), None)

    rec(0, d, {}, f.one())
    cache[d] = out
    return out


def _merge_parts(parts: tuple, adds: tuple) -> tuple:
    return tuple(tuple(sorted(p + a, reverse=True)) if a else p for p, a in zip(parts, adds))


def _state_image(A: FFVO, p: Fraction, b: BasisState) -> dict:
    cache = A._cache.setdefault("mode", {})
    key = (p, b)
    got = cache.get(key)
    if got is not None:
        return got
    f = A.field
    z0 = base_exponent(A, b)
    out = {}
    ch = tuple(n + mu for n, mu in zip(b.charges, A.shift))
    gexp = sum((u * b.charge(j) for j, u in enumerate(A.qgrade)), Fraction(0))
    s0 = A.prefactor * f.qpow(gexp)
    if A.phase % f.params.L:
        s0 = s0 * f.zeta(A.phase)
    for parts, d_a, ca in _annihilation_terms(A, b):
        d_c = -p - z0 + d_a
        if d_c.denominator != 1 or d_c < 0:
            continue
        for adds, cc in creation_terms(A, int(d_c)):
            st = BasisState(_merge_parts(parts, adds), ch, b.sectors)
            v = s0 * ca * cc
            old = out.get(st)
            out[st] = v if old is None else old + v
    out = {s: v for s, v in out.items() if not f.is_zero(v)}
    cache[key] = out
    return out


def apply_mode(A, p, v: FockVector) -> FockVector:
    """Coefficient of ``z^{-p}`` of ``A(z)`` applied to ``v``."""
    p = Fraction(p)
    out = FockVector(v.field)
    for c0, comp in _components(A):
        for b, c in v:
            for st, val in _state_image(comp, p, b).items():
                out.add_term(st, c * val if c0 is None else c * c0 * val)
    return out


def apply_normal_pair(A: FFVO, B: FFVO, r, s, b: BasisState) -> FockVector:
    """Coefficient of ``z^{-r} w^{-s}`` of ``:A(z) B(w):`` on ``b`` (no contraction).

    Results are memoized on ``A``; callers must not mutate the returned vector.
    """
    r, s = Fraction(r), Fraction(s)
    memo = A._cache.setdefault("normal_pair", {})
    key = (id(B), r, s, b)
    hit = memo.get(key)
    if hit is not None and hit[0] is B:
        return hit[1]
    out = _normal_pair(A, B, r, s, b)
    memo[key] = (B, out)
    return out


def _normal_pair(A: FFVO, B: FFVO, r: Fraction, s: Fraction, b: BasisState) -> FockVector:
    f = A.field
    zA = base_exponent(A, b)
    zB = base_exponent(B, b)
    ch = tuple(n + a + c for n, a, c in zip(b.charges, A.shift, B.shift))
    gexp = sum(((u + w) * b.charge(j) for j, (u, w) in enumerate(zip(A.qgrade, B.qgrade))), Fraction(0))
    s0 = A.prefactor * B.prefactor * f.qpow(gexp)
    if (A.phase + B.phase) % f.params.L:
        s0 = s0 * f.zeta(A.phase + B.phase)
    out = FockVector(f)
    # joint annihilation: each part k with multiplicity n splits into (eA, eB, rest)
    per_slot = []
    for j, lam in enumerate(b.parts):
        opts = [(Counter(), 0, 0, f.one())]
        for k, n in Counter(lam).items():
            if k > min(A.K, B.K):
                raise TailTooShort(f"state part {k} exceeds tail order")
            a, bb = A.annihilation[j][k - 1], B.annihilation[j][k - 1]
            kap = heis_bracket(f, k)
            new = []
            for rem, dA, dB, c in opts:
                for eA in range(n + 1):
                    for eB in range(n - eA + 1):
                        if (eA and f.is_zero(a)) or (eB and f.is_zero(bb)):
                            continue
                        mult = math.factorial(n) // (math.factorial(eA) * math.factorial(eB)
                                                     * math.factorial(n - eA - eB))
                        coeff = c * mult * (a * kap) ** eA * (bb * kap) ** eB
                        r2 = rem.copy()
                        r2[k] += eA + eB
                        new.append((r2, dA + k * eA, dB + k * eB, coeff))
            opts = new
        per_slot.append([(_remove(lam, rem), dA, dB, c) for rem, dA, dB, c in opts])
    for combo in product(*per_slot):
        parts = tuple(x[0] for x in combo)
        dA = sum(x[1] for x in combo)
        dB = sum(x[2] for x in combo)
        ca = f.one()
        for x in combo:
            ca = ca * x[3]
        cA = -r - zA + dA
        cB = -s - zB + dB
        if cA.denominator != 1 or cB.denominator != 1 or cA < 0 or cB < 0:
            continue
        for addA, c1 in creation_terms(A, int(cA)):
            for addB, c2 in creation_terms(B, int(cB)):
                adds = tuple(x + y for x, y in zip(addA, addB))
                st = BasisState(_merge_parts(parts, adds), ch, b.sectors)
                out.add_term(st, s0 * ca * c1 * c2)
    return out


def predicted_product(A: FFVO, B: FFVO, r, s, b: BasisState) -> FockVector:
    """``A_r B_s b`` reconstructed from the contraction and the normal-ordered pair."""
    f = A.field
    memo = A._cache.setdefault("contract", {})
    hit = memo.get(id(B))
    if hit is None or hit[0] is not B:
        hit = (B, contract(A, B))
        memo[id(B)] = hit
    C = hit[1]
    r, s = Fraction(r), Fraction(s)
    zB = base_exponent(B, b)
    n_max = int(math.floor(b.heisenberg_degree() - zB - s - C.wpow))
    out = FockVector(f)
    if n_max < 0:
        return out
    coeffs = C.coefficients(n_max)
    for n in range(n_max + 1):
        if f.is_zero(coeffs[n]):
            continue
        term = apply_normal_pair(A, B, r + C.zpow - n, s + C.wpow + n, b)
        out = out + term.scale(coeffs[n])
    return out


def dressed_normal_pair(S: ScalarSeries, A: FFVO, B: FFVO, r, s, b: BasisState) -> FockVector:
    """Coefficient of ``z^{-r} w^{-s}`` of ``S(z, w) :A(z) B(w):`` on ``b``.

    ``S`` may be expanded in ``w/z`` or in ``z/w``; only finitely many series
    coefficients meet a nonzero normal-ordered coefficient.
    """
    f = A.field
    r, s = Fraction(r), Fraction(s)
    out = FockVector(f)
    if S.orientation == "w/z":
        n_max = int(math.floor(b.heisenberg_degree() - base_exponent(B, b) - s - S.wpow))
    else:
        n_max = int(math.floor(b.heisenberg_degree() - base_exponent(A, b) - r - S.zpow))
    if n_max < 0:
        return out
    coeffs = S.coefficients(n_max)
    for n in range(n_max + 1):
        if f.is_zero(coeffs[n]):
            continue
        if S.orientation == "w/z":
            term = apply_normal_pair(A, B, r + S.zpow - n, s + S.wpow + n, b)
        else:
            term = apply_normal_pair(A, B, r + S.zpow + n, s + S.wpow - n, b)
        out = out + term.scale(coeffs[n])
    return out
