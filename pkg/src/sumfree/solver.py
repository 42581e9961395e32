"""Exact and heuristic computation of the largest admissible subset.

The target quantity is M_X(A): the size of the largest S inside A whose
pairwise sums of distinct elements all avoid X.  Admissible sets are exactly
the independent sets of the conflict graph on A with an edge {a,b} whenever
a + b lands in X, so the exact solver is a branch-and-bound maximum-clique
search on the complement, with greedy-colouring upper bounds on dense
bit-rows.  A seeded greedy heuristic and the iterative construction that
stacks solver calls over nested tail segments live here too.
"""

from __future__ import annotations

import multiprocessing as mp
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .constructions import SplitMix64
from .sets import IntSet, is_sumfree_wrt, restricted_sumset


@dataclass(frozen=True)
class ConflictGraph:
    """Graph on the elements of A; independent sets are the admissible S."""

    vertices: tuple
    adjacency: tuple[int, ...]  # bit-row per vertex
    ambient: object

    def __post_init__(self):
        n = len(self.vertices)
        for i, row in enumerate(self.adjacency):
            if row >> n:
                raise ValueError("adjacency row exceeds vertex count")
            if row & (1 << i):
                raise ValueError("self-loop in conflict graph")
        for i in range(n):
            for j in range(i + 1, n):
                if bool(self.adjacency[i] & (1 << j)) != bool(self.adjacency[j] & (1 << i)):
                    raise ValueError("asymmetric adjacency")

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edge_count(self) -> int:
        return sum(row.bit_count() for row in self.adjacency) // 2


def conflict_graph(a: IntSet, x: IntSet) -> ConflictGraph:
    """Edge {u,v} iff u != v and u + v lies in X."""
    if a.ambient != x.ambient:
        raise ValueError("ambient mismatch between A and X")
    amb = a.ambient
    verts = a.elements
    n = len(verts)
    xset = x._as_set()
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if amb.add(verts[i], verts[j]) in xset:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return ConflictGraph(verts, tuple(adj), amb)


@dataclass(frozen=True)
class SolveResult:
    witness: IntSet
    size: int
    optimal: bool
    nodes_explored: int
    wall_time: float


class _Found(Exception):
    """Raised to unwind once a target-size solution exists."""


def _greedy_clique(comp: list[int], order: list[int]) -> int:
    mask = 0
    taken = 0
    for v in order:
        if taken == 0 or (comp[v] & mask) == mask:
            mask |= 1 << v
            taken += 1
    return mask


def _clique_search(
    comp: list[int],
    root_cand: int,
    root_mask: int,
    root_size: int,
    best_size: int,
    node_cap: Optional[int],
    deadline: Optional[float],
    target: Optional[int],
    shared_best=None,
) -> tuple[int, int, int, bool]:
    """Branch and bound for a maximum clique inside root_cand, given root_mask taken.

    Returns (best_size, best_mask, nodes, completed).  best_mask is 0 when no
    improvement over the incoming best_size was found.
    """
    best_mask = 0
    nodes = 0
    completed = True

    def expand(r_size: int, r_mask: int, cand: int) -> None:
        nonlocal best_size, best_mask, nodes, completed
        nodes += 1
        if node_cap is not None and nodes > node_cap:
            completed = False
            raise _Found
        if deadline is not None and nodes % 512 == 0:
            if time.monotonic() > deadline:
                completed = False
                raise _Found
            if shared_best is not None and shared_best[0] > best_size:
                best_size = shared_best[0]
        if r_size + cand.bit_count() <= best_size:
            return
        # Greedy colouring: partition cand into complement-independent classes;
        # a clique meets each class at most once.
        order = []
        append = order.append
        uncoloured = cand
        colour = 0
        while uncoloured:
            colour += 1
            avail = uncoloured
            while avail:
                bit = avail & -avail
                v = bit.bit_length() - 1
                avail = (avail ^ bit) & ~comp[v]
                uncoloured ^= bit
                append((colour, v))
        for i in range(len(order) - 1, -1, -1):
            colour, v = order[i]
            if r_size + colour <= best_size:
                return
            bit = 1 << v
            new_size = r_size + 1
            new_mask = r_mask | bit
            if new_size > best_size:
                best_size = new_size
                best_mask = new_mask
                if shared_best is not None:
                    with shared_best.get_lock():
                        if new_size > shared_best[0]:
                            shared_best[0] = new_size
                if target is not None and best_size >= target:
                    raise _Found
            new_cand = cand & comp[v]
            if new_cand:
                expand(new_size, new_mask, new_cand)
            cand &= ~bit

    try:
        expand(root_size, root_mask, root_cand)
    except _Found:
        pass
    return best_size, best_mask, nodes, completed


def _fast_kernel():
    """Compiled search kernel, or None when numba is unavailable."""
    try:
        from . import _fastclique

        return _fastclique
    except ImportError:
        return None


_PAR_STATE: dict = {}


def _par_init(comp, n, node_cap, deadline, target, shared_best, use_fast):
    fast = _fast_kernel() if use_fast else None
    packed = fast.pack_rows(comp, n) if fast is not None else None
    shared_view = None
    if fast is not None:
        import numpy as np

        shared_view = np.frombuffer(shared_best.get_obj(), dtype=np.int64)
    _PAR_STATE.update(
        comp=comp,
        n=n,
        node_cap=node_cap,
        deadline=deadline,
        target=target,
        shared=shared_best,
        fast=fast,
        packed=packed,
        shared_view=shared_view,
    )


def _par_task(job: tuple[int, int, int]) -> tuple[int, int, int, bool]:
    r_mask, r_size, cand = job
    st = _PAR_STATE
    best = st["shared"][0]
    fast = st["fast"]
    if fast is not None:
        return fast.clique_search_fast(
            st["comp"],
            st["n"],
            cand,
            r_mask,
            best,
            st["node_cap"],
            st["shared_view"],
            st["target"],
            packed_comp=st["packed"],
        )
    return _clique_search(
        st["comp"], cand, r_mask, r_size, best, st["node_cap"], st["deadline"], st["target"],
        shared_best=st["shared"],
    )


def _gen_frontier(
    comp: list[int], full: int, best_size: int, min_tasks: int
) -> tuple[list[tuple[int, int, int]], int, int]:
    """Split the root problem into subproblems by expanding the widest nodes.

    Returns (tasks, best_size, best_mask) where tasks carry (r_mask, r_size,
    cand); any solution beating best_size lies in exactly one task's subtree.
    """
    import heapq

    heap = [(-full.bit_count(), 0, 0, 0, full)]
    counter = 1
    best = best_size
    best_mask = 0
    while heap and len(heap) < min_tasks:
        _, _, r_mask, r_size, cand = heapq.heappop(heap)
        order = []
        uncoloured = cand
        colour = 0
        while uncoloured:
            colour += 1
            avail = uncoloured
            while avail:
                bit = avail & -avail
                v = bit.bit_length() - 1
                avail = (avail ^ bit) & ~comp[v]
                uncoloured ^= bit
                order.append((colour, v))
        for i in range(len(order) - 1, -1, -1):
            colour, v = order[i]
            if r_size + colour <= best:
                break
            bit = 1 << v
            if r_size + 1 > best:
                best = r_size + 1
                best_mask = r_mask | bit
            new_cand = cand & comp[v]
            if new_cand:
                heapq.heappush(
                    heap, (-new_cand.bit_count(), counter, r_mask | bit, r_size + 1, new_cand)
                )
                counter += 1
            cand &= ~bit
    tasks = [(r_mask, r_size, cand) for key, _, r_mask, r_size, cand in sorted(heap)]
    return tasks, best, best_mask


def _solve_graph(
    graph: ConflictGraph,
    node_budget: Optional[int] = None,
    time_budget_s: Optional[float] = None,
    target: Optional[int] = None,
    jobs: int = 1,
) -> tuple[int, int, int, bool]:
    """Maximum independent set of the conflict graph as (size, mask, nodes, optimal)."""
    n = graph.n
    if n == 0:
        return 0, 0, 0, True
    full = (1 << n) - 1
    adj = graph.adjacency
    comp = [(~adj[i]) & full & ~(1 << i) for i in range(n)]

    order = sorted(range(n), key=lambda v: (-comp[v].bit_count(), v))
    # Strong incumbent first: several deterministic greedy passes.
    best_size, best_mask = 0, 0
    for greedy_order in (order, list(range(n - 1, -1, -1)), list(range(n))):
        mask = _greedy_clique(comp, greedy_order)
        if mask.bit_count() > best_size:
            best_size, best_mask = mask.bit_count(), mask
    if target is not None and best_size >= target:
        return best_size, best_mask, 0, True

    deadline = time.monotonic() + time_budget_s if time_budget_s is not None else None

    if jobs <= 1 or n < 32:
        fast = _fast_kernel() if (n >= 48 and deadline is None) else None
        if fast is not None:
            size, mask, nodes, completed = fast.clique_search_fast(
                comp, n, full, 0, best_size, node_budget, None, target
            )
        else:
            size, mask, nodes, completed = _clique_search(
                comp, full, 0, 0, best_size, node_budget, deadline, target
            )
        if mask == 0:
            size, mask = best_size, best_mask
        found_target = target is not None and size >= target
        return size, mask, nodes, completed or found_target

    # Parallel mode: split the search tree into fine-grained subproblems and
    # share the incumbent size monotonically across workers.
    tasks, gen_best, gen_mask = _gen_frontier(comp, full, best_size, 24 * jobs)
    if gen_best > best_size:
        best_size, best_mask = gen_best, gen_mask
    if target is not None and best_size >= target:
        return best_size, best_mask, 0, True
    ctx = mp.get_context("fork")
    shared_best = ctx.Array("q", [best_size])
    use_fast = n >= 48 and deadline is None and _fast_kernel() is not None
    per_worker_cap = None if node_budget is None else max(1, node_budget // jobs)
    total_nodes = 0
    completed = True
    results = []
    with ctx.Pool(
        jobs,
        initializer=_par_init,
        initargs=(comp, n, per_worker_cap, deadline, target, shared_best, use_fast),
    ) as pool:
        for size, mask, nodes, done in pool.imap(_par_task, tasks, chunksize=1):
            total_nodes += nodes
            completed = completed and done
            if mask:
                results.append((size, mask))
    size, mask = best_size, best_mask
    for s, m in results:
        if s > size:
            size, mask = s, m
        elif s == size and _mask_key(graph, m) < _mask_key(graph, mask):
            mask = m
    found_target = target is not None and size >= target
    return size, mask, total_nodes, completed or found_target


def _mask_key(graph: ConflictGraph, mask: int):
    return tuple(graph.vertices[i] for i in range(graph.n) if mask & (1 << i))


def _mask_to_set(graph: ConflictGraph, mask: int) -> IntSet:
    return IntSet(graph.ambient, _mask_key(graph, mask))


def max_sumfree_subset(
    a: IntSet,
    x: IntSet,
    node_budget: Optional[int] = None,
    time_budget_s: Optional[float] = None,
    jobs: int = 1,
) -> SolveResult:
    """Exact M_X(A) with witness; best incumbent with optimal=False on budget stop."""
    t0 = time.monotonic()
    graph = conflict_graph(a, x)
    size, mask, nodes, optimal = _solve_graph(
        graph, node_budget=node_budget, time_budget_s=time_budget_s, jobs=jobs
    )
    witness = _mask_to_set(graph, mask)
    if not is_sumfree_wrt(witness, x):
        raise AssertionError("solver produced an invalid witness")
    return SolveResult(witness, size, optimal, nodes, time.monotonic() - t0)


def is_summing(a: IntSet, x: IntSet, k: int, jobs: int = 1) -> bool:
    """True iff every k-element subset of A has a distinct-pair sum inside X."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(a) < k:
        return True
    graph = conflict_graph(a, x)
    size, _, _, completed = _solve_graph(graph, target=k, jobs=jobs)
    if size >= k:
        return False
    if not completed:
        raise AssertionError("target search aborted without a verdict")
    return True


_ORDERS = ("decreasing-absolute-value", "increasing", "seeded-random")


def greedy_sumfree(
    a: IntSet, x: IntSet, order: str = "decreasing-absolute-value", seed: int = 0
) -> IntSet:
    """Inclusion-maximal admissible subset, deterministic for a given order and seed."""
    if a.ambient != x.ambient:
        raise ValueError("ambient mismatch between A and X")
    if order not in _ORDERS:
        raise ValueError(f"order must be one of {_ORDERS}")
    elems = list(a.elements)
    if order == "decreasing-absolute-value":
        if a.ambient.is_integers:
            elems.sort(key=lambda v: (-abs(v), v))
        else:
            elems.sort(reverse=True)
    elif order == "increasing":
        elems.sort()
    else:
        SplitMix64(seed).shuffle(elems)
    amb = a.ambient
    xset = x._as_set()
    chosen: list = []
    for v in elems:
        if all(amb.add(v, s) not in xset for s in chosen):
            chosen.append(v)
    return IntSet(amb, chosen)


@dataclass(frozen=True)
class BootstrapParams:
    """Parameters for the nested-tail construction; sizes grow by 2l(mk+1) per round."""

    k: int
    l: int
    d: int
    m: int

    def __post_init__(self):
        if self.k < 2 or self.l < 1 or self.d < 1 or self.m < 0:
            raise ValueError("need k >= 2, l >= 1, d >= 1, m >= 0")

    def tail_size(self, i: int) -> int:
        return 2 * self.d * (2 * self.l * (self.m * self.k + 1)) ** i


Oracle = Callable[[IntSet, IntSet, int], Optional[IntSet]]


def exact_oracle(a: IntSet, z: IntSet, k: int) -> Optional[IntSet]:
    """Size-k admissible subset of A w.r.t. Z via the exact solver, or None."""
    res = max_sumfree_subset(a, z)
    if res.size < k:
        return None
    return IntSet(a.ambient, res.witness.elements[:k])


def greedy_oracle(a: IntSet, z: IntSet, k: int) -> Optional[IntSet]:
    s = greedy_sumfree(a, z)
    if len(s) < k:
        return None
    return IntSet(a.ambient, s.elements[:k])


@dataclass(frozen=True)
class BootstrapTrace:
    rounds: tuple
    failed_round: Optional[int]
    verified: bool


def bootstrap_construct(
    a: IntSet, params: BootstrapParams, oracle: Oracle = exact_oracle
) -> tuple[IntSet, BootstrapTrace]:
    """Stack disjoint size-k admissible pieces over the nested largest-element tails.

    Round i works inside Z_i (the tail of the 2D(2l(mk+1))^i largest elements)
    with the elements that could collide with earlier pieces removed; the
    pieces stay disjoint and their union is admissible w.r.t. all of A, which
    is re-verified before returning.  A round whose oracle finds nothing ends
    the construction early with the failure recorded.
    """
    if not a.ambient.is_integers:
        raise ValueError("the construction works over the integers")
    if any(v <= 0 for v in a.elements):
        raise ValueError("all elements must be strictly positive")
    if params.tail_size(params.m) > len(a):
        raise ValueError("size budget 2D(2l(mk+1))^m exceeds |A|")

    desc = sorted(a.elements, reverse=True)
    tails = [IntSet(a.ambient, desc[: params.tail_size(i)]) for i in range(params.m + 1)]

    pieces: list[IntSet] = []
    rounds = []
    failed: Optional[int] = None
    current = tails[0]
    for i in range(params.m + 1):
        z_i = tails[i]
        piece = oracle(current, z_i, params.k)
        if piece is not None:
            if not (
                len(piece) == params.k
                and set(piece.elements) <= set(current.elements)
                and is_sumfree_wrt(piece, z_i)
            ):
                raise ValueError(f"oracle returned an invalid piece in round {i}")
            pieces.append(piece)
        rounds.append(
            {
                "round": i,
                "tail_size": len(z_i),
                "pool_size": len(current),
                "found": piece is not None,
            }
        )
        if piece is None:
            failed = i
            break
        if i < params.m:
            taken = {0}
            for s in pieces:
                taken.update(s.elements)
            blocked = {z - t for z in z_i.elements for t in taken}
            current = IntSet(a.ambient, set(tails[i + 1].elements) - blocked)

    union: set = set()
    for s in pieces:
        union.update(s.elements)
    result = IntSet(a.ambient, union)
    verified = failed is None and is_sumfree_wrt(result, a)
    if failed is None and not verified:
        raise AssertionError("completed construction failed final admissibility check")
    if len(union) != sum(len(s) for s in pieces):
        raise AssertionError("construction pieces overlap")
    return result, BootstrapTrace(tuple(rounds), failed, verified)


def brute_force_max_sumfree(a: IntSet, x: IntSet) -> int:
    """Independent oracle: scan all 2^|A| subsets with a validity DP."""
    graph = conflict_graph(a, x)
    n = graph.n
    if n > 24:
        raise ValueError("brute force capped at 24 elements")
    adj = graph.adjacency
    valid = bytearray(1 << n)
    valid[0] = 1
    best = 0
    for mask in range(1, 1 << n):
        low = mask & -mask
        rest = mask ^ low
        v = low.bit_length() - 1
        if valid[rest] and not (adj[v] & rest):
            valid[mask] = 1
            c = mask.bit_count()
            if c > best:
                best = c
    return best
