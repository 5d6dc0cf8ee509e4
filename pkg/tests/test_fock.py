import json
import logging
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from qcurrents.fock import (BasisCache, BasisState, FockVector, HeisOp, basis_enumerate,
                            cache_key, coproduct_heis, heis_apply, heis_bracket, lattice_apply,
                            partitions, vacuum)
from qcurrents.scalar import ExactField, FieldParams

F = ExactField(FieldParams())


def _p(n):
    """Partition numbers by the pentagonal recursion, independent of ``partitions``."""
    p = [1] + [0] * n
    for k in range(1, n + 1):
        j, s = 1, 0
        while True:
            for g in (j * (3 * j - 1) // 2, j * (3 * j + 1) // 2):
                if g > k:
                    break
                s += (-1) ** (j + 1) * p[k - g]
            if j * (3 * j - 1) // 2 > k:
                break
            j += 1
        p[k] = s
    return p


def test_partition_counts():
    p = _p(10)
    for n in range(11):
        assert len(list(partitions(n))) == p[n]


def test_level_one_basis_size():
    p = _p(8)
    for sector in (0, 1):
        want = sum(p[d - (n * n + n * sector)]
                   for d in range(9) for n in range(-4, 5) if 0 <= d - (n * n + n * sector))
        assert len(basis_enumerate(0, [sector], 8)) == want


def test_basis_is_graded_and_sorted():
    b = basis_enumerate(1, [0, 1], 3)
    degs = [s.degree() for s in b]
    assert degs == sorted(degs) and max(degs) <= 3
    assert len(set(b)) == len(b)


def test_heisenberg_bracket_value():
    f = ExactField(FieldParams())
    for k in range(1, 5):
        assert f.equal(heis_bracket(f, k), f.qint(2 * k) * f.qint(k) / k)


def test_fused_heisenberg_commutator():
    for m in range(3):
        f = ExactField(FieldParams.for_level(m))
        v = FockVector.basis(f, vacuum([0] * (m + 1)))
        for k in range(1, 4):
            out = heis_apply(coproduct_heis(f, m, k), heis_apply(coproduct_heis(f, m, -k), v))
            want = f.qint(2 * k) * f.qint((m + 1) * k) / k
            assert f.equal(out.coefficient(vacuum([0] * (m + 1))), want)


@given(st.lists(st.integers(1, 4), max_size=4), st.integers(1, 4), st.integers(-2, 2))
@settings(max_examples=50, deadline=None)
def test_canonical_commutation(parts, k, n):
    b = BasisState((tuple(sorted(parts, reverse=True)),), (Fraction(n),), (0,))
    v = FockVector.basis(F, b)
    up, down = HeisOp.single(F, 0, -k), HeisOp.single(F, 0, k)
    comm = heis_apply(down, heis_apply(up, v)) - heis_apply(up, heis_apply(down, v))
    assert dict(comm.terms) == dict(v.scale(heis_bracket(F, k)).terms)


@given(st.integers(-3, 3), st.integers(-3, 3))
def test_lattice_shifts_compose(a, b):
    v = FockVector.basis(F, vacuum([0]))
    lhs = lattice_apply(0, a, lattice_apply(0, b, v))
    assert list(lhs.terms) == [vacuum([0], [a + b])]


def test_cache_round_trip(tmp_path):
    cache = BasisCache(str(tmp_path))
    f = ExactField(FieldParams.for_level(1))
    (b1, t1), hit1 = cache.load_or_build(f, 1, [0, 0], 3)
    (b2, t2), hit2 = cache.load_or_build(f, 1, [0, 0], 3)
    assert (hit1, hit2) == (False, True)
    assert b1 == b2
    assert t1.keys() == t2.keys()
    assert all(f.equal(u[1], v[1]) for k in t1 for u, v in zip(t1[k], t2[k]))


def test_corrupt_cache_is_rebuilt(tmp_path, caplog):
    cache = BasisCache(str(tmp_path))
    key = cache_key(0, [0], 2, 2, 1)
    with open(cache.path(key), "w") as fh:
        fh.write("{not json")
    with caplog.at_level(logging.WARNING):
        (basis, _), hit = cache.load_or_build(F, 0, [0], 2)
    assert not hit
    assert basis == basis_enumerate(0, [0], 2)
    assert "rebuilt" in caplog.text
    with open(cache.path(key)) as fh:
        assert json.load(fh)["key"] == key
