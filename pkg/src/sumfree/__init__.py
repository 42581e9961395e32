"""Sum-free subset computation and verification toolkit.

Exact and heuristic solvers for the largest subset of A whose restricted
sumset avoids a reference set, additive-energy and symmetry-set machinery,
discrete Fourier analysis on finite abelian groups, covering-number and
neighbourhood-system calculus, and a runnable finite-field density-increment
pipeline, plus instance generators and a batch CLI.
"""

from .sets import (
    FiniteAbelian,
    GroupSet,
    IntSet,
    Integers,
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
from .solver import (
    BootstrapParams,
    ConflictGraph,
    SolveResult,
    bootstrap_construct,
    brute_force_max_sumfree,
    conflict_graph,
    exact_oracle,
    greedy_oracle,
    greedy_sumfree,
    is_summing,
    max_sumfree_subset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
