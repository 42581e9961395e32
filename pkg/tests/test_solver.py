"""Exact solver, greedy heuristic, summing test, and the tail construction."""

import math
from fractions import Fraction

import pytest

from sumfree.constructions import SplitMix64, interval, powers_of_two, random_dense
from sumfree.sets import IntSet, is_sumfree_wrt, zset
from sumfree.solver import (
    BootstrapParams,
    bootstrap_construct,
    brute_force_max_sumfree,
    conflict_graph,
    exact_oracle,
    greedy_oracle,
    greedy_sumfree,
    is_summing,
    max_sumfree_subset,
)


def _random_set(rng, size, lo=-30, hi=30):
    out = set()
    while len(out) < size:
        out.add(lo + rng.next_below(hi - lo + 1))
    return zset(out)


def test_conflict_graph_examples():
    a = zset([1, 2, 3, 4, 5])
    g = conflict_graph(a, a)
    edges = {
        (g.vertices[i], g.vertices[j])
        for i in range(g.n)
        for j in range(i + 1, g.n)
        if g.adjacency[i] >> j & 1
    }
    assert edges == {(1, 2), (1, 3), (1, 4), (2, 3)}
    tri = zset([-1, 0, 1])
    assert conflict_graph(tri, tri).edge_count() == 3


def test_solver_examples():
    tri = zset([-1, 0, 1])
    res = max_sumfree_subset(tri, tri)
    assert res.size == 1 and res.optimal
    assert max_sumfree_subset(zset([7]), zset([7])).size == 1
    res = max_sumfree_subset(interval(5), interval(5))
    assert res.size == 3
    empty = max_sumfree_subset(zset([]), zset([]))
    assert empty.size == 0 and empty.optimal and len(empty.witness) == 0


def test_solver_matches_brute_force():
    rng = SplitMix64(10)
    for _ in range(60):
        a = _random_set(rng, 4 + rng.next_below(11))
        res = max_sumfree_subset(a, a)
        assert res.optimal
        assert res.size == brute_force_max_sumfree(a, a)
        assert is_sumfree_wrt(res.witness, a)


def test_solver_mx_variant_matches_brute_force():
    rng = SplitMix64(11)
    for _ in range(30):
        a = _random_set(rng, 10)
        x = _random_set(rng, 14, lo=-40, hi=40)
        res = max_sumfree_subset(a, x)
        assert res.size == brute_force_max_sumfree(a, x)


def test_solver_determinism():
    rng = SplitMix64(12)
    a = _random_set(rng, 14)
    r1 = max_sumfree_subset(a, a)
    r2 = max_sumfree_subset(a, a)
    assert r1.size == r2.size and r1.witness == r2.witness


def test_budget_flagging():
    a = random_dense(120, Fraction(1, 2), 5)
    res = max_sumfree_subset(a, a, node_budget=3)
    assert not res.optimal
    assert is_sumfree_wrt(res.witness, a)
    full = max_sumfree_subset(a, a)
    assert full.optimal and full.size >= res.size


def test_parallel_matches_serial_size():
    rng = SplitMix64(13)
    for _ in range(4):
        a = _random_set(rng, 36, lo=1, hi=120)
        assert max_sumfree_subset(a, a).size == max_sumfree_subset(a, a, jobs=4).size


def test_ruzsa_bound_on_corpus():
    rng = SplitMix64(14)
    for _ in range(60):
        a = _random_set(rng, 4 + rng.next_below(20), lo=-60, hi=60)
        size = max_sumfree_subset(a, a).size
        assert size > 2 * math.log(len(a), 3) - 1


def test_is_summing():
    tri = zset([-1, 0, 1])
    assert is_summing(tri, tri, 2)
    assert is_summing(zset([3]), zset([5]), 2)  # |A| < k
    assert not is_summing(interval(5), interval(5), 3)
    with pytest.raises(ValueError):
        is_summing(tri, tri, 1)


def test_greedy_examples():
    tri = zset([-1, 0, 1])
    assert len(greedy_sumfree(tri, tri)) == 1
    p = powers_of_two(8)
    assert greedy_sumfree(p, p) == p
    assert greedy_sumfree(interval(5), interval(5)).elements == (3, 4, 5)


def test_greedy_maximal_and_dominated():
    rng = SplitMix64(15)
    for order in ("decreasing-absolute-value", "increasing", "seeded-random"):
        for _ in range(15):
            a = _random_set(rng, 12)
            s = greedy_sumfree(a, a, order=order, seed=3)
            assert is_sumfree_wrt(s, a)
            # inclusion-maximal: nothing else can be added
            for v in a.elements:
                if v in s._as_set():
                    continue
                assert not is_sumfree_wrt(zset(s.elements + (v,)), a)
            assert len(s) <= max_sumfree_subset(a, a).size


def test_greedy_seed_determinism():
    a = random_dense(60, Fraction(1, 2), 8)
    s1 = greedy_sumfree(a, a, order="seeded-random", seed=42)
    s2 = greedy_sumfree(a, a, order="seeded-random", seed=42)
    assert s1 == s2


def test_bootstrap_params_validation():
    with pytest.raises(ValueError):
        BootstrapParams(k=1, l=1, d=1, m=0)
    p = BootstrapParams(k=2, l=1, d=2, m=1)
    assert p.tail_size(0) == 4 and p.tail_size(1) == 24


def test_bootstrap_m0_single_round():
    a = interval(40)
    params = BootstrapParams(k=2, l=1, d=3, m=0)
    s, trace = bootstrap_construct(a, params)
    assert trace.failed_round is None and trace.verified
    assert len(s) == 2
    assert is_sumfree_wrt(s, a)


def test_bootstrap_two_rounds():
    a = interval(200)
    params = BootstrapParams(k=2, l=1, d=2, m=1)
    s, trace = bootstrap_construct(a, params)
    assert trace.failed_round is None and trace.verified
    assert len(s) == params.k * len(trace.rounds)
    assert is_sumfree_wrt(s, a)


def test_bootstrap_three_rounds_greedy_oracle():
    a = interval(500)
    params = BootstrapParams(k=2, l=1, d=2, m=2)
    s, trace = bootstrap_construct(a, params, oracle=greedy_oracle)
    if trace.failed_round is None:
        assert trace.verified and is_sumfree_wrt(s, a)
        assert len(s) == params.k * len(trace.rounds)
    else:
        assert len(s) == params.k * trace.failed_round


def test_bootstrap_oracle_failure():
    a = interval(40)
    params = BootstrapParams(k=2, l=1, d=3, m=0)
    s, trace = bootstrap_construct(a, params, oracle=lambda *_: None)
    assert len(s) == 0 and trace.failed_round == 0


def test_bootstrap_validation():
    params = BootstrapParams(k=2, l=1, d=2, m=2)
    with pytest.raises(ValueError):
        bootstrap_construct(interval(200), params)  # 400 > 200
    with pytest.raises(ValueError):
        bootstrap_construct(zset([-1, 2, 3, 4]), BootstrapParams(k=2, l=1, d=1, m=0))


def test_bootstrap_pieces_disjoint():
    a = interval(300)
    params = BootstrapParams(k=3, l=1, d=2, m=1)
    s, trace = bootstrap_construct(a, params, oracle=exact_oracle)
    if trace.failed_round is None:
        assert len(s) == 3 * len(trace.rounds)
