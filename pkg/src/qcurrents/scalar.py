"""Coefficient field for the quantum-current engine.

Every structure constant that occurs is a rational function of a single
formal root ``s = q**(1/D)`` with coefficients in the cyclotomic field
``Q(zeta_L)``.  Two interchangeable backends implement the same small
interface (:class:`ExactField` and :class:`NumericField`), so the operator
calculus above this module never needs to know which one it is running on.

Exact elements are stored in a canonical reduced form::

    s**v * (N_0(s) + N_1(s) zeta + ... ) / den(s)

with ``den`` in ``Q[s]``, ``den(0) == 1``, ``gcd(den, N_j) == 1`` over ``Q``
and ``min_j val(N_j) == 0``.  Because ``den`` has rational coefficients, the
reduced denominator is unique and equality is syntactic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

from flint import fmpq, fmpq_poly, fmpz_poly

__all__ = [
    "FieldParams",
    "Scalar",
    "ExactField",
    "NumericField",
    "QSeries",
    "NonRepresentableExponent",
    "PoleAtSample",
    "DEFAULT_Q",
    "DEFAULT_TOL",
    "qint",
    "qpow",
    "g_series",
    "numeric_eval",
]

DEFAULT_Q = complex(0.7303, 0.1159)
DEFAULT_TOL = 1e-9

Rational = Union[int, Fraction]


class NonRepresentableExponent(ValueError):
    """A q-exponent is not an integer multiple of 1/D."""


class PoleAtSample(ZeroDivisionError):
    """A denominator vanishes (exactly, or at the numeric sample point)."""


@dataclass(frozen=True)
class FieldParams:
    """Root denominator ``D`` (``s = q^(1/D)``) and cyclotomic order ``L``."""

    root_denominator: int = 2
    cyclotomic_order: int = 1

    def __post_init__(self):
        if self.root_denominator < 1 or self.cyclotomic_order < 1:
            raise ValueError("D and L must be positive integers")

    @classmethod
    def for_level(cls, m: int) -> "FieldParams":
        return cls(2 * (m + 1), m + 1)

    @property
    def D(self) -> int:
        return self.root_denominator

    @property
    def L(self) -> int:
        return self.cyclotomic_order

    def s_exponent(self, r: Rational) -> int:
        """Exponent of ``s`` representing ``q**r``."""
        e = Fraction(r) * self.root_denominator
        if e.denominator != 1:
            raise NonRepresentableExponent(
                f"q^{r} needs D divisible by {Fraction(r).denominator} (D={self.D})")
        return int(e)


# ---------------------------------------------------------------------------
# cyclotomic bookkeeping
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _cyclo(L: int):
    """Reduction table for powers of zeta modulo the L-th cyclotomic polynomial.

    Returns ``(phi, table)`` where ``table[j]`` is the coefficient vector of
    ``zeta**j`` (``0 <= j < max(L, 2 phi)``) in the basis ``1, zeta, ...``.
    """
    cyc = fmpz_poly.cyclotomic(L)
    phi = cyc.degree()
    table = []
    for j in range(max(L, 2 * phi)):
        x = fmpz_poly([0] * j + [1])
        r = x % cyc
        c = [int(v) for v in r.coeffs()]
        table.append(tuple(c + [0] * (phi - len(c))))
    units = tuple(a for a in range(1, L + 1) if math.gcd(a, L) == 1) if L > 1 else (1,)
    return phi, tuple(table), units


def _valuation(p: fmpq_poly) -> int:
    if p[0] != 0:
        return 0
    for i in range(1, p.degree() + 1):
        if p[i] != 0:
            return i
    return 0


_SMALL: dict = {}
_ONE = fmpq_poly([1])
_ZERO = fmpq_poly([])


class Scalar:
    """Exact element of ``Q(zeta_L)(q^(1/D))``; immutable."""

    __slots__ = ("params", "v", "comps", "den", "_hash", "_const")

    def __init__(self, params: FieldParams, v: int, comps: Sequence[fmpq_poly],
                 den: fmpq_poly, _normalized: bool = False):
        self.params = params
        if _normalized:
            self.v, self.comps, self.den = v, tuple(comps), den
        else:
            self.v, self.comps, self.den = _normalize(v, comps, den)
        self._hash = None
        # coefficient when the value is c * s**v with rational c, else None
        c0 = self.comps[0]
        if c0.degree() == 0 and self.den.is_one() and all(c.is_zero() for c in self.comps[1:]):
            self._const = c0[0]
        else:
            self._const = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_rational(cls, params: FieldParams, r) -> "Scalar":
        if r == 0 or r == 1:
            key = (params, int(r))
            hit = _SMALL.get(key)
            if hit is None:
                hit = _SMALL[key] = cls._from_rational(params, r)
            return hit
        return cls._from_rational(params, r)

    @classmethod
    def _from_rational(cls, params: FieldParams, r) -> "Scalar":
        phi = _cyclo(params.L)[0]
        r = Fraction(r)
        comps = [fmpq_poly([fmpq(r.numerator, r.denominator)])] + [_ZERO] * (phi - 1)
        return cls(params, 0, comps, _ONE)

    @classmethod
    def monomial(cls, params: FieldParams, e: int, coeff=1) -> "Scalar":
        phi = _cyclo(params.L)[0]
        c = Fraction(coeff)
        if c == 0:
            return cls.from_rational(params, 0)
        comps = [fmpq_poly([fmpq(c.numerator, c.denominator)])] + [_ZERO] * (phi - 1)
        return cls(params, e, comps, _ONE, _normalized=True)

    @classmethod
    def zeta_power(cls, params: FieldParams, j: int) -> "Scalar":
        phi, table, _ = _cyclo(params.L)
        vec = table[j % params.L]
        return cls(params, 0, [fmpq_poly([c]) for c in vec], _ONE)

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return self.comps[0].degree() < 0 and all(c.is_zero() for c in self.comps[1:])

    def is_laurent(self) -> bool:
        """True when the denominator is trivial."""
        return self.den.is_one()

    def is_rational_laurent(self) -> bool:
        return self.den.is_one() and all(c.is_zero() for c in self.comps[1:])

    def laurent_terms(self) -> dict[int, Fraction]:
        """``{s-exponent: coefficient}`` for a denominator-free, zeta-free value."""
        if not self.is_rational_laurent():
            raise ValueError("not a rational Laurent polynomial")
        out = {}
        for i, c in enumerate(self.comps[0].coeffs()):
            if c != 0:
                out[self.v + i] = Fraction(int(c.p), int(c.q))
        return out

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            if other.params is not self.params and other.params != self.params:
                raise ValueError("mixing scalars from different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return Scalar.from_rational(self.params, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        v = min(self.v, other.v)
        a = [c.left_shift(self.v - v) for c in self.comps]
        b = [c.left_shift(other.v - v) for c in other.comps]
        if self.den == other.den:
            return Scalar(self.params, v, [x + y for x, y in zip(a, b)], self.den)
        g = self.den.gcd(other.den)
        fa = other.den // g
        fb = self.den // g
        return Scalar(self.params, v, [x * fa + y * fb for x, y in zip(a, b)], fb * other.den)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(self.params, self.v, [-c for c in self.comps], self.den, _normalized=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return Scalar.from_rational(self.params, 0)
            c = fmpq(Fraction(other).numerator, Fraction(other).denominator)
            return Scalar(self.params, self.v, [x * c for x in self.comps], self.den,
                          _normalized=True)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return Scalar.from_rational(self.params, 0)
        # monomial times anything keeps the canonical form
        if other._const is not None:
            c = other._const
            return Scalar(self.params, self.v + other.v, [x * c for x in self.comps], self.den,
                          _normalized=True)
        if self._const is not None:
            c = self._const
            return Scalar(self.params, self.v + other.v, [x * c for x in other.comps], other.den,
                          _normalized=True)
        if len(self.comps) == 1 and self.den.is_one() and other.den.is_one():
            return Scalar(self.params, self.v + other.v, [self.comps[0] * other.comps[0]], _ONE,
                          _normalized=True)
        comps = _mul_comps(self.params.L, self.comps, other.comps)
        if self.den.is_one() and other.den.is_one():
            return Scalar(self.params, self.v + other.v, comps, _ONE)
        return Scalar(self.params, self.v + other.v, comps, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise PoleAtSample("division by exact zero")
        L = self.params.L
        phi, table, units = _cyclo(L)
        if phi == 1:
            num = self.comps[0]
            adj = [_ONE]
        else:
            adj = [_ONE] + [_ZERO] * (phi - 1)
            for a in units:
                if a == 1:
                    continue
                adj = _mul_comps(L, adj, _galois(L, self.comps, a))
            full = _mul_comps(L, self.comps, adj)
            num = full[0]
            assert all(c.is_zero() for c in full[1:])
        e = _valuation(num)
        num = num.right_shift(e)
        comps = [c * self.den for c in adj]
        return Scalar(self.params, -self.v - e, comps, num)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise PoleAtSample("division by zero")
            return self * (1 / Fraction(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = Scalar.from_rational(self.params, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparison -------------------------------------------------------
    def _key(self):
        return (self.v, tuple(tuple(c.coeffs()) for c in self.comps), tuple(self.den.coeffs()))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Scalar.from_rational(self.params, other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return (self.params == other.params and self.v == other.v
                and self.den == other.den and self.comps == other.comps)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    # -- evaluation and display ------------------------------------------
    def to_complex(self, q: complex) -> complex:
        D, L = self.params.D, self.params.L
        s = cmath.exp(cmath.log(q) / D)
        zeta = cmath.exp(2j * math.pi / L)
        den = _eval_poly(self.den, s)
        if abs(den) < 1e-300:
            raise PoleAtSample(f"denominator vanishes at q={q}")
        num = sum(_eval_poly(c, s) * zeta ** j for j, c in enumerate(self.comps))
        return num * s ** self.v / den

    def __repr__(self):
        return f"Scalar({self.to_str()})"

    def to_str(self) -> str:
        D = self.params.D

        def qexp(e):
            r = Fraction(e, D)
            return "" if r == 0 else (f"q^{r}" if r != 1 else "q")

        def poly_str(p: fmpq_poly, shift: int):
            parts = []
            for i, c in enumerate(p.coeffs()):
                if c == 0:
                    continue
                c = Fraction(int(c.p), int(c.q))
                mon = qexp(i + shift)
                if mon == "":
                    parts.append(str(c))
                elif c == 1:
                    parts.append(mon)
                elif c == -1:
                    parts.append("-" + mon)
                else:
                    parts.append(f"{c}*{mon}")
            return " + ".join(parts).replace("+ -", "- ") or "0"

        terms = []
        for j, c in enumerate(self.comps):
            if c.is_zero():
                continue
            body = poly_str(c, self.v)
            terms.append(body if j == 0 else f"({body})*zeta^{j}")
        num = " + ".join(terms) or "0"
        if self.den.is_one():
            return num
        return f"({num})/({poly_str(self.den, 0)})"


def _normalize(v, comps, den):
    comps = list(comps)
    nz = [c for c in comps if not c.is_zero()]
    if not nz:
        return 0, tuple(_ZERO for _ in comps), _ONE
    val = min(_valuation(c) for c in nz)
    if val:
        comps = [c.right_shift(val) for c in comps]
        v += val
    if not den.is_one():
        dv = _valuation(den)
        if dv:
            den = den.right_shift(dv)
            v -= dv
        g = den
        for c in nz:
            g = g.gcd(c)
            if g.is_one():
                break
        if not g.is_one() and g.degree() > 0:
            den = den // g
            comps = [c // g for c in comps]
        c0 = den[0]
        if c0 != 1:
            inv = 1 / c0
            den = den * inv
            comps = [c * inv for c in comps]
    return v, tuple(comps), den


def _mul_comps(L, a, b):
    phi, table, _ = _cyclo(L)
    if phi == 1:
        return [a[0] * b[0]]
    out = [_ZERO] * phi
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            if y.is_zero():
                continue
            t = x * y
            for k, c in enumerate(table[i + j]):
                if c:
                    out[k] = out[k] + t * c
    return out


def _galois(L, comps, a):
    phi, table, _ = _cyclo(L)
    out = [_ZERO] * phi
    for j, c in enumerate(comps):
        if c.is_zero():
            continue
        for k, t in enumerate(table[(a * j) % L]):
            if t:
                out[k] = out[k] + c * t
    return out


def _eval_poly(p: fmpq_poly, x: complex) -> complex:
    acc = 0j
    for c in reversed(p.coeffs()):
        acc = acc * x + int(c.p) / int(c.q)
    return acc


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------

class ExactField:
    """Exact backend: values are canonical :class:`Scalar` objects."""

    name = "exact"

    def __init__(self, params: FieldParams):
        self.params = params
        self._one = Scalar.from_rational(params, 1)
        self._zero = Scalar.from_rational(params, 0)
        self._qpow = {}
        self._qint = {}
        self._kappa = {}

    def __repr__(self):
        return f"ExactField(D={self.params.D}, L={self.params.L})"

    def one(self):
        return self._one

    def zero(self):
        return self._zero

    def const(self, r) -> Scalar:
        return Scalar.from_rational(self.params, r)

    def qpow(self, r: Rational) -> Scalar:
        r = Fraction(r)
        out = self._qpow.get(r)
        if out is None:
            out = Scalar.monomial(self.params, self.params.s_exponent(r))
            self._qpow[r] = out
        return out

    def kappa(self, k: int) -> Scalar:
        """Heisenberg bracket ``[2k][k]/k``."""
        out = self._kappa.get(k)
        if out is None:
            out = self.qint(2 * k) * self.qint(k) / k
            self._kappa[k] = out
        return out

    def qint(self, k: int) -> Scalar:
        out = self._qint.get(k)
        if out is None:
            if k == 0:
                out = self._zero
            else:
                # [k] = sum_{j=0}^{|k|-1} q^{|k|-1-2j}, odd in k
                acc = self._zero
                n = abs(k)
                for j in range(n):
                    acc = acc + self.qpow(n - 1 - 2 * j)
                out = acc if k > 0 else -acc
            self._qint[k] = out
        return out

    def zeta(self, j: int) -> Scalar:
        return Scalar.zeta_power(self.params, j)

    def is_zero(self, x) -> bool:
        if isinstance(x, Scalar):
            return x.is_zero()
        return x == 0

    def equal(self, x, y) -> bool:
        return self.is_zero(x - y)

    def to_complex(self, x, q: complex = DEFAULT_Q) -> complex:
        if isinstance(x, Scalar):
            return x.to_complex(q)
        return complex(x)

    def fmt(self, x) -> str:
        return x.to_str() if isinstance(x, Scalar) else str(x)


class NumericField:
    """Numeric backend: values are Python complex numbers at a sampled q."""

    name = "numeric"

    def __init__(self, params: FieldParams, q: complex = DEFAULT_Q, tol: float = DEFAULT_TOL):
        if q == 0:
            raise ValueError("q must be nonzero")
        self.params = params
        self.q = complex(q)
        self.tol = tol
        self._logq = cmath.log(self.q)

    def __repr__(self):
        return f"NumericField(q={self.q}, D={self.params.D}, L={self.params.L})"

    def one(self):
        return 1 + 0j

    def zero(self):
        return 0j

    def const(self, r) -> complex:
        return complex(Fraction(r))

    def qpow(self, r: Rational) -> complex:
        self.params.s_exponent(r)
        return cmath.exp(float(Fraction(r)) * self._logq)

    def qint(self, k: int) -> complex:
        if k == 0:
            return 0j
        return (self.qpow(k) - self.qpow(-k)) / (self.qpow(1) - self.qpow(-1))

    def zeta(self, j: int) -> complex:
        return cmath.exp(2j * math.pi * j / self.params.L)

    def kappa(self, k: int) -> complex:
        return self.qint(2 * k) * self.qint(k) / k

    def is_zero(self, x) -> bool:
        return abs(x) <= self.tol

    def equal(self, x, y) -> bool:
        return abs(x - y) <= self.tol * max(1.0, abs(x), abs(y))

    def to_complex(self, x, q: complex | None = None) -> complex:
        return complex(x)

    def fmt(self, x) -> str:
        return f"{complex(x):.12g}"


# ---------------------------------------------------------------------------
# truncated series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QSeries:
    """Truncated power series ``c_0 + c_1 x + ... + c_K x^K``."""

    coeffs: tuple
    variable: str = "x"

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def _binary(self, other, field, op):
        K = min(self.order, other.order)
        return QSeries(tuple(op(self.coeffs[i], other.coeffs[i]) for i in range(K + 1)),
                       self.variable)

    def add(self, other: "QSeries", field) -> "QSeries":
        return self._binary(other, field, lambda a, b: a + b)

    def mul(self, other: "QSeries", field) -> "QSeries":
        K = min(self.order, other.order)
        out = []
        for n in range(K + 1):
            acc = field.zero()
            for i in range(n + 1):
                acc = acc + self.coeffs[i] * other.coeffs[n - i]
            out.append(acc)
        return QSeries(tuple(out), self.variable)


def exp_series(gammas: Sequence, field, K: int) -> QSeries:
    """Coefficients of ``exp(sum_{k>=1} gammas[k-1] x^k)`` through ``x^K``.

    Uses ``n c_n = sum_{k=1}^n k gamma_k c_{n-k}``.
    """
    c = [field.one()]
    for n in range(1, K + 1):
        acc = field.zero()
        for k in range(1, n + 1):
            if k - 1 < len(gammas):
                g = gammas[k - 1]
                if not field.is_zero(g):
                    acc = acc + g * c[n - k] * k
        c.append(acc / n)
    return QSeries(tuple(c))


def log_series(series: QSeries, field) -> list:
    """Inverse of :func:`exp_series`; requires ``c_0 == 1``."""
    c = series.coeffs
    if not field.equal(c[0], field.one()):
        raise ValueError("log_series needs constant term 1")
    K = series.order
    gam = []
    for n in range(1, K + 1):
        acc = c[n] * n
        for k in range(1, n):
            acc = acc - gam[k - 1] * c[n - k] * k
        gam.append(acc / n)
    return gam


# ---------------------------------------------------------------------------
# module-level convenience operations
# ---------------------------------------------------------------------------

def qint(k: int, field=None):
    """q-integer ``[k] = (q^k - q^-k)/(q - q^-1)``."""
    field = field or ExactField(FieldParams())
    return field.qint(k)


def qpow(r: Rational, field=None):
    """``q**r`` as an exact monomial ``s**(rD)``."""
    field = field or ExactField(FieldParams())
    return field.qpow(r)


def g_series(K: int, field=None, a: int = 2) -> QSeries:
    """Coefficients of ``g(z) = (q^a z - 1)/(z - q^a)`` around ``z = 0``.

    Expands ``1/(z - q^a) = -sum_n q^{-a(n+1)} z^n`` and multiplies by the
    numerator, so ``c_0 = q^-a`` and ``c_n = q^{-a(n+1)} - q^{-a(n-1)}`` for n >= 1.
    """
    field = field or ExactField(FieldParams())
    if K < 0:
        raise ValueError("order must be non-negative")
    geo = [-field.qpow(-a * (n + 1)) for n in range(K + 1)]
    out = []
    for n in range(K + 1):
        c = -geo[n]
        if n >= 1:
            c = c + field.qpow(a) * geo[n - 1]
        out.append(c)
    return QSeries(tuple(out), "z")


def numeric_eval(x, q_value: complex = DEFAULT_Q) -> complex:
    """Evaluate an exact scalar at ``q = q_value`` (principal D-th root for s)."""
    if q_value == 0:
        raise PoleAtSample("q = 0")
    if isinstance(x, Scalar):
        return x.to_complex(q_value)
    return complex(x)
