"""Fock modules F_0, F_1 and their tensor powers.

A basis state of ``F_{i_1} (x) ... (x) F_{i_{m+1}}`` is a per-slot partition
(the Heisenberg content ``a_{-k}``) together with a per-slot lattice charge
``n_j`` (the state carries ``e^{n_j alpha + Lambda_{i_j}}``).  Coefficients
live in one of the fields from :mod:`qcurrents.scalar`.

The Heisenberg bracket is ``[a_k, a_l] = delta_{k+l,0} [2k][k]/k``; the
pairing is ``(alpha, alpha) = 2``, ``(alpha, Lambda_1) = 1``,
``(alpha, Lambda_0) = 0``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, NamedTuple, Sequence

from .scalar import ExactField, Scalar

log = logging.getLogger(__name__)

CACHE_VERSION = 1


class BasisState(NamedTuple):
    """Graded basis element; partitions are weakly decreasing tuples."""

    parts: tuple
    charges: tuple
    sectors: tuple

    @property
    def nslots(self) -> int:
        return len(self.parts)

    def charge(self, j: int) -> Fraction:
        """``(alpha, n_j alpha + Lambda_{i_j}) = 2 n_j + i_j``."""
        return 2 * self.charges[j] + self.sectors[j]

    def degree(self) -> Fraction:
        d = Fraction(0)
        for lam, n, i in zip(self.parts, self.charges, self.sectors):
            d += sum(lam) + n * n + n * i
        return d

    def heisenberg_degree(self) -> int:
        return sum(sum(lam) for lam in self.parts)

    def __str__(self):
        slots = []
        for lam, n, i in zip(self.parts, self.charges, self.sectors):
            a = "".join(f"a{-k}" for k in lam) or "1"
            slots.append(f"{a}|{n}>_{i}")
        return " (x) ".join(slots)


def vacuum(sectors: Sequence[int], charges: Sequence | None = None) -> BasisState:
    sectors = tuple(int(i) for i in sectors)
    for i in sectors:
        if i not in (0, 1):
            raise ValueError(f"sector label must be 0 or 1, got {i}")
    if charges is None:
        charges = (Fraction(0),) * len(sectors)
    return BasisState(tuple(() for _ in sectors), tuple(Fraction(c) for c in charges), sectors)


def partitions(n: int, max_part: int | None = None) -> Iterator[tuple]:
    """Partitions of ``n`` as weakly decreasing tuples, reverse-lexicographic."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for k in range(min(n, max_part), 0, -1):
        for rest in partitions(n - k, k):
            yield (k,) + rest


class FockVector:
    """Finite linear combination of :class:`BasisState` with field coefficients."""

    __slots__ = ("field", "terms")

    def __init__(self, field, terms: dict | None = None):
        self.field = field
        self.terms = {}
        if terms:
            for b, c in terms.items():
                if not field.is_zero(c):
                    self.terms[b] = c

    @classmethod
    def basis(cls, field, b: BasisState, coeff=None) -> "FockVector":
        return cls(field, {b: field.one() if coeff is None else coeff})

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def is_zero(self) -> bool:
        return not self.terms

    def add_term(self, b: BasisState, c) -> None:
        """In-place accumulation; drops coefficients that cancel."""
        old = self.terms.get(b)
        new = c if old is None else old + c
        if self.field.is_zero(new):
            self.terms.pop(b, None)
        else:
            self.terms[b] = new

    def __add__(self, other: "FockVector") -> "FockVector":
        out = FockVector(self.field, dict(self.terms))
        for b, c in other.terms.items():
            out.add_term(b, c)
        return out

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + other.scale(-1)

    def scale(self, c) -> "FockVector":
        if isinstance(c, int) and c == 1:
            return self
        return FockVector(self.field, {b: v * c for b, v in self.terms.items()})

    def coefficient(self, b: BasisState):
        return self.terms.get(b, self.field.zero())

    def __repr__(self):
        if not self.terms:
            return "FockVector(0)"
        return "FockVector(" + " + ".join(
            f"({self.field.fmt(c)}) {b}" for b, c in self.terms.items()) + ")"


def extract_coefficient(v: FockVector, b: BasisState):
    """Matrix-coefficient read-out against the monomial basis."""
    return v.coefficient(b)


# ---------------------------------------------------------------------------
# Heisenberg generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeisOp:
    """``sum_j weights[j] a_k^{(j)}``; a single-slot generator has one weight."""

    mode: int
    weights: tuple  # ((slot, scalar), ...)

    @classmethod
    def single(cls, field, slot: int, mode: int) -> "HeisOp":
        if mode == 0:
            raise ValueError("Heisenberg modes are nonzero")
        return cls(mode, ((slot, field.one()),))


def heis_bracket(field, k: int):
    """``[a_k, a_{-k}] = [2k][k]/k`` (for k > 0)."""
    return field.kappa(k)


def _mult(lam: tuple) -> Counter:
    return Counter(lam)


def _from_mult(c: Counter) -> tuple:
    out = []
    for k, n in c.items():
        out.extend([k] * n)
    return tuple(sorted(out, reverse=True))


def heis_apply(op: HeisOp, v: FockVector) -> FockVector:
    field = v.field
    k = op.mode
    out = FockVector(field)
    bracket = heis_bracket(field, abs(k)) if k > 0 else None
    for b, c in v:
        for slot, w in op.weights:
            lam = b.parts[slot]
            if k < 0:
                new = tuple(sorted(lam + (-k,), reverse=True))
                coeff = c * w
            else:
                n = lam.count(k)
                if n == 0:
                    continue
                ms = list(lam)
                ms.remove(k)
                new = tuple(ms)
                coeff = c * w * bracket * n
            parts = b.parts[:slot] + (new,) + b.parts[slot + 1:]
            out.add_term(BasisState(parts, b.charges, b.sectors), coeff)
    return out


def lattice_apply(slot: int, mu, v: FockVector) -> FockVector:
    """``e^{mu alpha}`` on one slot."""
    mu = Fraction(mu)
    out = FockVector(v.field)
    for b, c in v:
        ch = b.charges[:slot] + (b.charges[slot] + mu,) + b.charges[slot + 1:]
        out.add_term(BasisState(b.parts, ch, b.sectors), c)
    return out


def qgrade_apply(slot: int, t, v: FockVector) -> FockVector:
    """``q^{t d_alpha}`` on one slot."""
    t = Fraction(t)
    out = FockVector(v.field)
    for b, c in v:
        out.add_term(b, c * v.field.qpow(t * b.charge(slot)))
    return out


def charge_read(slot: int, b: BasisState) -> Fraction:
    return b.charge(slot)


def coproduct_weight(field, m: int, slot: int, k: int):
    """Weight of slot ``slot`` (0-based) in the fused generator ``Delta^m(a_k)``.

    Reading off the a_{-k} (resp. a_k) coefficient of the iterated coproduct
    of phi(z) (resp. psi(z)) gives ``q^{-(m - 2 slot)|k|/2}`` for both signs.
    """
    return field.qpow(Fraction(-(m - 2 * slot) * abs(k), 2))


def coproduct_heis(field, m: int, k: int) -> HeisOp:
    if k == 0:
        raise ValueError("Heisenberg modes are nonzero")
    return HeisOp(k, tuple((j, coproduct_weight(field, m, j, k)) for j in range(m + 1)))


# ---------------------------------------------------------------------------
# graded bases
# ---------------------------------------------------------------------------

def _charge_candidates(sector: int, max_degree, window, step: Fraction) -> list:
    lo, hi = window if window is not None else (None, None)
    out = []
    # n^2 + n i <= max_degree bounds |n|
    bound = int(abs(Fraction(max_degree)) ** 0.5) + 2
    n = -Fraction(bound)
    while n <= bound:
        if (lo is None or n >= lo) and (hi is None or n <= hi):
            if n * n + n * sector <= max_degree:
                out.append(n)
        n += step
    return out


def basis_enumerate(m: int, sectors: Sequence[int], N, charge_window=None,
                    charge_step=Fraction(1)) -> list:
    """All basis states of ``(x)^{m+1}`` with total degree ``<= N``.

    ``charge_window`` is an inclusive ``(lo, hi)`` interval applied to every
    slot charge (``None`` means unrestricted).  Ordered by
    ``(degree, charges, partitions)``.
    """
    sectors = tuple(sectors)
    if len(sectors) != m + 1:
        raise ValueError("need one sector label per slot")
    if N < 0:
        return []
    if charge_window is not None and not isinstance(charge_window, tuple):
        charge_window = tuple(charge_window)
    step = Fraction(charge_step)
    per_slot = [_charge_candidates(i, N, charge_window, step) for i in sectors]
    states = []
    for charges in product(*per_slot):
        latt = sum(n * n + n * i for n, i in zip(charges, sectors))
        room = N - latt
        if room < 0:
            continue
        room = int(room)  # Heisenberg degrees are integers
        for split in _compositions(room, m + 1):
            for parts in product(*(list(partitions(d)) for d in split)):
                states.append(BasisState(tuple(parts), tuple(charges), sectors))
    states.sort(key=lambda b: (b.degree(), b.charges, tuple(tuple(-k for k in p) for p in b.parts)))
    return states


def _compositions(total: int, slots: int) -> Iterator[tuple]:
    """Tuples of non-negative ints of length ``slots`` with sum ``<= total``."""
    if slots == 0:
        yield ()
        return
    for d in range(total + 1):
        for rest in _compositions(total - d, slots - 1):
            yield (d,) + rest


# ---------------------------------------------------------------------------
# optional on-disk cache
# ---------------------------------------------------------------------------

class CacheCorrupt(RuntimeError):
    """A cache file exists but does not parse or does not match its key."""


def cache_key(m: int, sectors, N, D: int, L: int) -> str:
    blob = json.dumps({"v": CACHE_VERSION, "m": m, "sectors": list(sectors), "N": str(N),
                       "D": D, "L": L}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _scalar_to_json(x: Scalar):
    return {"v": x.v,
            "comps": [[str(c) for c in p.coeffs()] for p in x.comps],
            "den": [str(c) for c in x.den.coeffs()]}


def _scalar_from_json(params, d) -> Scalar:
    from flint import fmpq, fmpq_poly

    def poly(cs):
        return fmpq_poly([fmpq(Fraction(c).numerator, Fraction(c).denominator) for c in cs])

    return Scalar(params, d["v"], [poly(c) for c in d["comps"]], poly(d["den"]))


def _state_to_json(b: BasisState):
    return [[list(p) for p in b.parts], [str(c) for c in b.charges], list(b.sectors)]


def _state_from_json(d) -> BasisState:
    return BasisState(tuple(tuple(p) for p in d[0]), tuple(Fraction(c) for c in d[1]),
                      tuple(d[2]))


def default_cache_dir() -> str | None:
    return os.environ.get("QCURRENTS_CACHE_DIR")


class BasisCache:
    """Serialized basis plus single-slot annihilation tables for ``a_k``.

    The table stores, for each basis state and each ``k <= N``, the image of
    ``a_k^{(j)}`` on every slot.  Only exact fields are cached.
    """

    def __init__(self, directory: str):
        self.directory = directory

    def path(self, key: str) -> str:
        return os.path.join(self.directory, f"basis-{key}.json")

    def load_or_build(self, field: ExactField, m: int, sectors, N):
        key = cache_key(m, sectors, N, field.params.D, field.params.L)
        p = self.path(key)
        if os.path.exists(p):
            try:
                return self._load(field, p, key), True
            except CacheCorrupt as exc:
                log.warning("cache file %s ignored and rebuilt: %s", p, exc)
        basis, table = self._build(field, m, sectors, N)
        self._store(field, p, key, basis, table)
        return (basis, table), False

    @staticmethod
    def _build(field, m, sectors, N):
        basis = basis_enumerate(m, sectors, N)
        index = {b: i for i, b in enumerate(basis)}
        table = {}
        for i, b in enumerate(basis):
            for j in range(m + 1):
                for k in sorted(set(b.parts[j])):
                    img = heis_apply(HeisOp.single(field, j, k), FockVector.basis(field, b))
                    table[(i, j, k)] = [(index[c], v) for c, v in img]
        return basis, table

    def _store(self, field, p, key, basis, table):
        os.makedirs(self.directory, exist_ok=True)
        doc = {"version": CACHE_VERSION, "key": key,
               "basis": [_state_to_json(b) for b in basis],
               "table": [[i, j, k, [[t, _scalar_to_json(v)] for t, v in img]]
                         for (i, j, k), img in table.items()]}
        tmp = p + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, p)

    @staticmethod
    def _load(field, p, key):
        try:
            with open(p) as fh:
                doc = json.load(fh)
            if doc.get("version") != CACHE_VERSION or doc.get("key") != key:
                raise CacheCorrupt("version or key mismatch")
            basis = [_state_from_json(d) for d in doc["basis"]]
            table = {(i, j, k): [(t, _scalar_from_json(field.params, v)) for t, v in img]
                     for i, j, k, img in doc["table"]}
        except CacheCorrupt:
            raise
        except Exception as exc:  # malformed json or fields
            raise CacheCorrupt(str(exc)) from exc
        return basis, table


def states_in(vs: Iterable[FockVector]) -> set:
    out = set()
    for v in vs:
        out.update(v.terms)
    return out
