"""Compiled maximum-clique kernel on fixed-width bitsets.

Same branch-and-bound as the pure-Python search in solver.py (greedy
colouring bound, last-colour-first branching) operating on (n x w) uint64
adjacency words, JIT-compiled with numba.  The incumbent size may live in a
shared int64 array so parallel workers can exchange bounds; updates are
monotone, so a lost race only weakens pruning, never correctness.
"""

from __future__ import annotations

import numpy as np
from numba import int64, njit, uint64

_M1 = uint64(0x5555555555555555)
_M2 = uint64(0x3333333333333333)
_M4 = uint64(0x0F0F0F0F0F0F0F0F)
_H01 = uint64(0x0101010101010101)


@njit(uint64(uint64), cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> uint64(1)) & _M1)
    x = (x & _M2) + ((x >> uint64(2)) & _M2)
    x = (x + (x >> uint64(4))) & _M4
    return (x * _H01) >> uint64(56)


@njit(cache=True)
def _expand(comp, w, cand, r_size, r_mask, state, best_mask, node_cap, shared, target, scratch, ord_v, ord_c):
    # state[0] = best size, state[1] = nodes, state[2] = abort flag
    state[1] += 1
    if node_cap > 0 and state[1] > node_cap:
        state[2] = 1
        return
    if shared[0] > state[0]:
        state[0] = shared[0]

    total = int64(0)
    for j in range(w):
        total += int64(_popcount(cand[j]))
    if r_size + total <= state[0]:
        return

    # Greedy colouring of cand; scratch rows hold per-depth work areas.
    order_v = ord_v[r_size]
    order_c = ord_c[r_size]
    uncoloured = scratch[r_size, 0:w]
    avail = scratch[r_size, w : 2 * w]
    for j in range(w):
        uncoloured[j] = cand[j]
    colour = int64(0)
    count = int64(0)
    while count < total:
        colour += 1
        for j in range(w):
            avail[j] = uncoloured[j]
        for j in range(w):
            while avail[j] != uint64(0):
                bit = avail[j] & (~avail[j] + uint64(1))
                v = j * 64 + int64(_popcount(bit - uint64(1)))
                avail[j] ^= bit
                uncoloured[j] ^= bit
                for jj in range(w):
                    avail[jj] &= ~comp[v, jj]
                order_v[count] = v
                order_c[count] = colour
                count += 1

    new_cand = np.empty(w, np.uint64)
    for i in range(total - 1, -1, -1):
        if r_size + order_c[i] <= state[0]:
            return
        v = order_v[i]
        jv = v // 64
        bitv = uint64(1) << uint64(v % 64)
        new_size = r_size + 1
        r_mask[jv] |= bitv
        if new_size > state[0]:
            state[0] = new_size
            for j in range(w):
                best_mask[j] = r_mask[j]
            if shared[0] < new_size:
                shared[0] = new_size
            if target > 0 and new_size >= target:
                state[2] = 1
                r_mask[jv] &= ~bitv
                return
        empty = True
        for j in range(w):
            new_cand[j] = cand[j] & comp[v, j]
            if new_cand[j] != uint64(0):
                empty = False
        if not empty:
            _expand(comp, w, new_cand, new_size, r_mask, state, best_mask, node_cap, shared, target, scratch, ord_v, ord_c)
            if state[2] != 0:
                r_mask[jv] &= ~bitv
                return
        r_mask[jv] &= ~bitv
        cand[jv] &= ~bitv


@njit(cache=True)
def _search(comp, w, cand0, root_mask, root_size, start_best, node_cap, shared, target):
    n = comp.shape[0]
    state = np.zeros(3, np.int64)
    state[0] = start_best
    best_mask = np.zeros(w, np.uint64)
    r_mask = root_mask.copy()
    scratch = np.zeros((n + 2, 2 * w), np.uint64)
    ord_v = np.zeros((n + 2, n + 1), np.int64)
    ord_c = np.zeros((n + 2, n + 1), np.int64)
    cand = cand0.copy()
    _expand(comp, w, cand, root_size, r_mask, state, best_mask, node_cap, shared, target, scratch, ord_v, ord_c)
    return state[0], best_mask, state[1], state[2]


def pack_rows(rows: list[int], n: int) -> np.ndarray:
    w = max(1, (n + 63) // 64)
    out = np.zeros((len(rows), w), np.uint64)
    for i, row in enumerate(rows):
        for j in range(w):
            out[i, j] = (row >> (64 * j)) & 0xFFFFFFFFFFFFFFFF
    return out


def pack_mask(mask: int, w: int) -> np.ndarray:
    out = np.zeros(w, np.uint64)
    for j in range(w):
        out[j] = (mask >> (64 * j)) & 0xFFFFFFFFFFFFFFFF
    return out


def unpack_mask(words: np.ndarray) -> int:
    mask = 0
    for j, word in enumerate(words):
        mask |= int(word) << (64 * j)
    return mask


def clique_search_fast(
    comp_rows: list[int],
    n: int,
    cand: int,
    root_mask: int,
    start_best: int,
    node_cap,
    shared_arr,
    target,
    packed_comp=None,
) -> tuple[int, int, int, bool]:
    """Drop-in counterpart of solver._clique_search for one subproblem.

    root_mask holds the vertices already committed to the clique.
    """
    comp = pack_rows(comp_rows, n) if packed_comp is None else packed_comp
    w = comp.shape[1]
    if shared_arr is None:
        shared_arr = np.zeros(1, np.int64)
        shared_arr[0] = start_best
    size, best_words, nodes, aborted = _search(
        comp,
        w,
        pack_mask(cand, w),
        pack_mask(root_mask, w),
        np.int64(root_mask.bit_count()),
        np.int64(start_best),
        np.int64(node_cap if node_cap is not None else 0),
        shared_arr,
        np.int64(target if target is not None else 0),
    )
    hit_target = target is not None and size >= target
    completed = (not aborted) or hit_target
    return int(size), unpack_mask(best_words), int(nodes), completed
