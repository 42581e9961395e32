"""Instance generators and the portable PRNG."""

from fractions import Fraction

import pytest

from sumfree.constructions import (
    SplitMix64,
    ap,
    behrend,
    from_spec,
    has_ap3,
    interval,
    powers_of_two,
    random_dense,
)
from sumfree.energy import energy_value
from sumfree.sets import restricted_sumset, sumset, zset
from sumfree.solver import conflict_graph, max_sumfree_subset


# Reference outputs of splitmix64 for seed 0 (first three draws).
SPLITMIX64_SEED0 = (
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
)


def test_splitmix64_reference_values():
    rng = SplitMix64(0)
    assert tuple(rng.next_u64() for _ in range(3)) == SPLITMIX64_SEED0


def test_splitmix64_bernoulli_exact_edges():
    rng = SplitMix64(1)
    assert not rng.bernoulli(Fraction(0))
    assert rng.bernoulli(Fraction(1))


def test_powers_of_two():
    assert powers_of_two(1).elements == (1,)
    assert powers_of_two(3).elements == (1, 2, 4)
    with pytest.raises(OverflowError):
        powers_of_two(63)


def test_powers_of_two_conflict_free():
    a = powers_of_two(10)
    g = conflict_graph(a, a)
    assert all(row == 0 for row in g.adjacency)
    assert max_sumfree_subset(a, a).size == 10
    # unrestricted pair-sums never land in the set either
    assert not (set(sumset(a, a).elements) - {2 * v for v in a.elements}) & set(a.elements)


def test_behrend_small():
    assert behrend(2, 2).elements == (1, 4)
    assert len(behrend(2, 1)) <= 2


def test_behrend_ap3_free():
    for d, n in ((2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (5, 2), (4, 3)):
        out = behrend(d, n)
        assert not has_ap3(out), (d, n)


def test_has_ap3_detects():
    assert has_ap3(zset([1, 2, 3]))
    assert not has_ap3(zset([1, 2, 4]))


def test_random_dense_determinism():
    a = random_dense(200, Fraction(1, 3), 99)
    b = random_dense(200, Fraction(1, 3), 99)
    assert a == b
    assert random_dense(50, Fraction(1), 1) == interval(50)
    assert len(random_dense(50, Fraction(0), 1)) == 0


def test_interval_and_ap():
    assert interval(3).elements == (1, 2, 3)
    assert ap(4, 3).elements == (1, 4, 7, 10)
    assert ap(0, 5).elements == ()
    with pytest.raises(ValueError):
        ap(3, 0)


def test_ap_energy_closed_form():
    for n in (1, 2, 5, 9, 16):
        assert energy_value(ap(n, 1)) == (2 * n**3 + n) // 3
        assert energy_value(ap(n, 7)) == (2 * n**3 + n) // 3


def test_from_spec():
    assert from_spec("interval:5") == interval(5)
    assert from_spec("powers2:4") == powers_of_two(4)
    assert from_spec("behrend:3,2") == behrend(3, 2)
    assert from_spec("random:20,1/2,7") == random_dense(20, Fraction(1, 2), 7)
    assert from_spec("ap:4,3,2").elements == (2, 5, 8, 11)
    with pytest.raises(ValueError):
        from_spec("nope:1")
    with pytest.raises(ValueError):
        from_spec("behrend:3")
