"""Core set arithmetic: sumsets, restricted sumsets, dilates, 2-adic levels."""

import math
from fractions import Fraction

import pytest

from sumfree.constructions import SplitMix64
from sumfree.sets import (
    FiniteAbelian,
    IntSet,
    Z,
    difference_set,
    dilate,
    heavy_levels,
    is_sumfree_wrt,
    load_set,
    restricted_sumset,
    save_set,
    set_from_json,
    set_to_json,
    sumset,
    two_adic_decompose,
    two_adic_valuation,
    zset,
)


def test_sumset_examples():
    assert sumset(zset([]), zset([1, 2])).elements == ()
    assert sumset(zset([0]), zset([1, 2])).elements == (1, 2)
    assert sumset(zset([1, 2]), zset([1, 2])).elements == (2, 3, 4)


def test_sumset_ambient_mismatch():
    with pytest.raises(ValueError):
        sumset(zset([1]), IntSet(FiniteAbelian([5]), [(1,)]))


def test_restricted_sumset_examples():
    assert restricted_sumset(zset([5])).elements == ()
    assert restricted_sumset(zset([1, 2, 3])).elements == (3, 4, 5)
    assert restricted_sumset(zset([0, 1, 2, 4])).elements == (1, 2, 3, 4, 5, 6)


def test_dilate_examples():
    assert dilate(zset([1, 3]), 2).elements == (2, 6)
    a = zset([4, 7, 9])
    assert dilate(a, 1) == a
    amb = FiniteAbelian([3])
    assert dilate(IntSet(amb, [(1,), (2,)]), 2).elements == ((1,), (2,))
    with pytest.raises(ValueError):
        dilate(zset([1]), 0)


def test_dilate_composition():
    rng = SplitMix64(1)
    for _ in range(20):
        a = zset(rng.next_below(1000) - 500 for _ in range(12))
        assert dilate(dilate(a, 2), 2) == dilate(a, 4)


def test_is_sumfree_wrt_examples():
    assert not is_sumfree_wrt(zset([-1, 1]), zset([-1, 0, 1]))
    assert is_sumfree_wrt(zset([7]), zset(range(-5, 20)))
    assert is_sumfree_wrt(zset([3, 4, 5]), zset([1, 2, 3, 4, 5]))


def test_two_adic_examples():
    dec = two_adic_decompose(zset([0, 1, 2, 3, 4, 6, 8]))
    assert dec.level(0).elements == (1, 3)
    assert dec.level(1).elements == (2, 6)
    assert dec.level(2).elements == (4,)
    assert dec.level(3).elements == (8,)
    assert dec.level(math.inf).elements == (0,)
    odds = zset(range(1, 30, 2))
    assert two_adic_decompose(odds).level(0) == odds
    assert two_adic_decompose(zset([12])).level(2).elements == (12,)


def test_two_adic_partition_property():
    rng = SplitMix64(2)
    for _ in range(30):
        a = zset(rng.next_below(4000) - 2000 for _ in range(25))
        dec = two_adic_decompose(a)
        assert dec.union() == a
        seen = set()
        for level, part in dec.levels.items():
            for z in part.elements:
                assert two_adic_valuation(z) == level
                assert z not in seen
                seen.add(z)


def test_two_adic_needs_integers():
    with pytest.raises(ValueError):
        two_adic_decompose(IntSet(FiniteAbelian([5]), [(1,)]))


def test_heavy_levels_examples():
    idx, heavy = heavy_levels(zset([1, 3, 5, 2]), Fraction(1, 2))
    assert idx == frozenset({0}) and heavy.elements == (1, 3, 5)
    idx, _ = heavy_levels(zset([2, 4]), Fraction(1, 4))
    assert idx == frozenset({1, 2})
    idx, heavy = heavy_levels(zset([8, 24, 40]), Fraction(1))
    assert idx == frozenset() and len(heavy) == 0


def test_heavy_levels_cardinality_bound():
    rng = SplitMix64(3)
    for _ in range(50):
        a = zset(rng.next_below(10**5) + 1 for _ in range(40))
        for eps in (Fraction(1, 7), Fraction(1, 3), Fraction(2, 5)):
            idx, _ = heavy_levels(a, eps)
            assert len(idx) < 1 / eps


def test_heavy_levels_validation():
    with pytest.raises(ValueError):
        heavy_levels(zset([1]), Fraction(0))
    with pytest.raises(ValueError):
        heavy_levels(zset([]), Fraction(1, 2))


def test_restricted_sumset_lower_bound_small_exhaustive():
    # |S +^ S| >= 2|S| - 3 for every S in [1, 12] with at least 2 elements
    universe = list(range(1, 13))
    for mask in range(1, 1 << 12):
        if mask.bit_count() < 2:
            continue
        s = zset(universe[i] for i in range(12) if mask >> i & 1)
        assert len(restricted_sumset(s)) >= 2 * len(s) - 3


def test_sumset_commutes_and_associates():
    rng = SplitMix64(4)
    for _ in range(15):
        a = zset(rng.next_below(100) for _ in range(6))
        b = zset(rng.next_below(100) for _ in range(6))
        c = zset(rng.next_below(100) for _ in range(6))
        assert sumset(a, b) == sumset(b, a)
        assert sumset(sumset(a, b), c) == sumset(a, sumset(b, c))


def test_overflow_detection():
    big = zset([2**62])
    with pytest.raises(OverflowError):
        sumset(big, big)
    with pytest.raises(OverflowError):
        dilate(big, 4)


def test_finite_group_arithmetic():
    amb = FiniteAbelian([4, 3])
    a = IntSet(amb, [(1, 2), (3, 1)])
    b = IntSet(amb, [(2, 2)])
    assert sumset(a, b).elements == ((1, 0), (3, 1))
    assert a.negate().elements == ((1, 2), (3, 1))
    assert difference_set(a, a)._as_set() >= {(0, 0)}
    assert amb.encode((3, 2)) == 11 and amb.decode(11) == (3, 2)


def test_group_order_budget():
    with pytest.raises(ValueError):
        FiniteAbelian([2] * 30)


def test_json_roundtrip(tmp_path):
    a = zset([-3, 0, 7])
    assert set_from_json(set_to_json(a)) == a
    amb = FiniteAbelian([5, 5])
    g = IntSet(amb, [(1, 2), (0, 4)])
    assert set_from_json(set_to_json(g)) == g
    path = tmp_path / "set.json"
    save_set(g, str(path))
    assert load_set(str(path)) == g


def test_plain_text_load(tmp_path):
    path = tmp_path / "set.txt"
    path.write_text("# comment\n3\n-1\n3\n")
    assert load_set(str(path)) == zset([-1, 3])
