"""Covering numbers, nested neighbourhood systems, and almost-closed pairs.

The covering number C(X;Y) is the least number of translates of Y needed to
cover X.  A system is a finite nested vector B_0, ..., B_L of symmetric
neighbourhoods of 0 with B_{i+1} + B_{i+1} inside B_i; its dimension is
measured through level-to-level covering numbers, and every dimension value
this module reports is an explicit upper bound (the homomorphism-stable
covering number underlying the exact notion minimises over all groups and is
not effectively computable; we expose the computable sandwich instead).

A pair (Z, W) is tau-closed when sets Z- and Z+ exist with Z- + W inside Z,
Z + W inside Z+, and |Z+| <= (1+tau)|Z-|; the witness carries all four sets
so validity can be re-checked independently.  Regularization produces such
witnesses from any set and system by a pigeonhole scan, and subgroup, Bohr,
and coset-progression constructors provide the standard supply of systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .sets import FiniteAbelian, IntSet, difference_set, sumset

INF = math.inf

_EXACT_UNIVERSE_CAP = 64
_EXACT_COVER_CAP = 20


# ---------------------------------------------------------------------------
# Covering numbers
# ---------------------------------------------------------------------------


def _cover_candidates(x: IntSet, y: IntSet) -> list:
    """Translates t with (t + Y) meeting X, i.e. t in X - Y."""
    return difference_set(x, y).elements


def greedy_cover(x: IntSet, y: IntSet) -> tuple[float, list]:
    """Greedy covering of X by translates of Y; size within (1 + ln|X|) of optimal."""
    if len(x) == 0:
        return 0, []
    if len(y) == 0:
        return INF, []
    amb = x.ambient
    uncovered = set(x.elements)
    chosen = []
    candidates = _cover_candidates(x, y)
    cand_sets = {t: {amb.add(t, v) for v in y.elements} & set(x.elements) for t in candidates}
    while uncovered:
        best_t = max(candidates, key=lambda t: (len(cand_sets[t] & uncovered), t))
        gain = cand_sets[best_t] & uncovered
        if not gain:
            raise AssertionError("greedy cover stalled")
        chosen.append(best_t)
        uncovered -= gain
    return len(chosen), chosen


def exact_cover(x: IntSet, y: IntSet) -> tuple[float, list]:
    """Exact minimum cover of X by translates of Y via branch and bound."""
    if len(x) == 0:
        return 0, []
    if len(y) == 0:
        return INF, []
    amb = x.ambient
    universe = {v: i for i, v in enumerate(x.elements)}
    n = len(universe)
    full = (1 << n) - 1
    masks = {}
    for t in _cover_candidates(x, y):
        m = 0
        for v in y.elements:
            idx = universe.get(amb.add(t, v))
            if idx is not None:
                m |= 1 << idx
        masks.setdefault(m, t)
    # Dominance: drop any translate whose coverage sits inside another's.
    items = sorted(masks.items(), key=lambda kv: -kv[0].bit_count())
    kept: list[tuple[int, object]] = []
    for m, t in items:
        if not any(m & km == m for km, _ in kept):
            kept.append((m, t))
    ub, greedy_choice = greedy_cover(x, y)
    if n > _EXACT_UNIVERSE_CAP and ub > _EXACT_COVER_CAP:
        raise ValueError("exact cover limited to |X| <= 64 or covers of size <= 20")
    cover_of = [[] for _ in range(n)]
    for m, t in kept:
        for i in range(n):
            if m >> i & 1:
                cover_of[i].append((m, t))
    best = [int(ub), list(greedy_choice)]
    max_gain = max(m.bit_count() for m, _ in kept)

    def dfs(covered: int, chosen: list) -> None:
        if covered == full:
            if len(chosen) < best[0]:
                best[0] = len(chosen)
                best[1] = list(chosen)
            return
        remaining = (full & ~covered).bit_count()
        if len(chosen) + (remaining + max_gain - 1) // max_gain >= best[0]:
            return
        fewest = min(
            (i for i in range(n) if not covered >> i & 1),
            key=lambda i: len(cover_of[i]),
        )
        options = sorted(cover_of[fewest], key=lambda mt: -(mt[0] & ~covered).bit_count())
        for m, t in options:
            chosen.append(t)
            dfs(covered | m, chosen)
            chosen.pop()

    dfs(0, [])
    return best[0], best[1]


def covering_number(x: IntSet, y: IntSet, mode: str = "exact") -> float:
    """C(X;Y) = min |T| with X inside T + Y; inf when Y is empty and X is not."""
    if x.ambient != y.ambient:
        raise ValueError("ambient mismatch")
    if mode == "exact":
        return exact_cover(x, y)[0]
    if mode == "greedy":
        return greedy_cover(x, y)[0]
    raise ValueError("mode must be 'exact' or 'greedy'")


def ruzsa_covering_translates(x: IntSet, y: IntSet) -> IntSet:
    """Maximal T inside X with the translates t + Y pairwise disjoint.

    Then X is covered by T + (Y - Y) and |T| <= |X + Y| / |Y|.
    """
    if x.ambient != y.ambient:
        raise ValueError("ambient mismatch")
    amb = x.ambient
    taken: list = []
    occupied: set = set()
    for t in x.elements:
        translate = {amb.add(t, v) for v in y.elements}
        if not translate & occupied:
            taken.append(t)
            occupied |= translate
    return IntSet(amb, taken)


@dataclass(frozen=True)
class HomCertificate:
    """Witness that C-flat(X;Y) <= C(W;Z) through a homomorphism phi.

    phi is a callable on elements (None = identity); validity demands
    phi(X) inside W and phi^{-1}(Z - Z) inside Y, the latter checked over
    the stated domain (X - Y by default for the identity map).
    """

    w: IntSet
    z: IntSet
    phi: Optional[object] = None
    label: str = "custom"


def _verify_identity_certificate(x: IntSet, y: IntSet, zprime: IntSet) -> Optional[str]:
    dd = difference_set(zprime, zprime)
    if not set(dd.elements) <= set(y.elements):
        return "Z' - Z' is not inside Y"
    return None


def cflat_bounds(
    x: IntSet,
    y: IntSet,
    certificates: Sequence = (),
    mode: str = "exact",
) -> tuple[float, float, dict]:
    """Computable sandwich around the homomorphism-stable covering number.

    lower: C(X;Y), valid since any certified cover pulls back to one of X by
    translates of Y.  upper: the best verified certificate value C(X;Z')
    over identity certificates Z' with Z' - Z' inside Y (the defaults try
    Z' = {0} and, when Y is closed under differences, Z' = Y itself).
    """
    if x.ambient != y.ambient:
        raise ValueError("ambient mismatch")
    lower = covering_number(x, y, mode)
    amb = x.ambient
    zero = amb.zero()
    tried = []
    upper = INF
    cert_list: list = list(certificates)
    if zero in y._as_set():
        cert_list.append(IntSet(amb, [zero]))
    if len(y) and set(difference_set(y, y).elements) <= set(y.elements):
        cert_list.append(y)
    for cert in cert_list:
        if isinstance(cert, IntSet):
            reason = _verify_identity_certificate(x, y, cert)
            if reason is not None:
                tried.append({"certificate": "identity", "ok": False, "reason": reason})
                continue
            value = covering_number(x, cert, mode)
            tried.append({"certificate": "identity", "ok": True, "value": value})
            upper = min(upper, value)
        elif isinstance(cert, HomCertificate):
            if cert.phi is not None:
                if amb.is_integers:
                    tried.append(
                        {"certificate": cert.label, "ok": False,
                         "reason": "general homomorphism certificates need a finite ambient"}
                    )
                    continue
                image_ok = all(cert.phi(v) in cert.w._as_set() for v in x.elements)
                zz = difference_set(cert.z, cert.z)._as_set()
                pre_ok = all(
                    amb2 in y._as_set()
                    for amb2 in (g for g in _all_elements(amb) if cert.phi(g) in zz)
                )
                if not image_ok:
                    tried.append({"certificate": cert.label, "ok": False, "reason": "X not inside phi^{-1}(W)"})
                    continue
                if not pre_ok:
                    tried.append({"certificate": cert.label, "ok": False, "reason": "phi^{-1}(Z-Z) not inside Y"})
                    continue
                value = covering_number(cert.w, cert.z, mode)
            else:
                if not set(x.elements) <= set(cert.w.elements):
                    tried.append({"certificate": cert.label, "ok": False, "reason": "X not inside W"})
                    continue
                reason = _verify_identity_certificate(x, y, cert.z)
                if reason is not None:
                    tried.append({"certificate": cert.label, "ok": False, "reason": reason})
                    continue
                value = covering_number(cert.w, cert.z, mode)
            tried.append({"certificate": cert.label, "ok": True, "value": value})
            upper = min(upper, value)
        else:
            raise ValueError("certificates must be IntSet or HomCertificate")
    return lower, upper, {"certificates": tried}


def _all_elements(amb) -> Iterable:
    if amb.is_integers:
        raise ValueError("cannot enumerate Z")
    return amb.elements()


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------

DEFAULT_DEPTH = 24
_NESTING_CHECK_BUDGET = 2_000_000


class System:
    """Nested vector B_0, ..., B_L of symmetric neighbourhoods of 0."""

    __slots__ = ("ambient", "levels", "dim_bound", "nesting_checked")

    def __init__(self, ambient, levels: Sequence[IntSet], dim_bound: Optional[float] = None,
                 check: str = "auto"):
        levels = tuple(levels)
        if len(levels) < 3:
            raise ValueError("a system needs depth at least 2 (three levels)")
        for lv in levels:
            if lv.ambient != ambient:
                raise ValueError("level ambient mismatch")
            if not lv.is_symmetric_neighbourhood():
                raise ValueError("levels must be symmetric and contain 0")
        object.__setattr__(self, "ambient", ambient)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "dim_bound", dim_bound)
        checked = False
        if check == "full" or (
            check == "auto"
            and sum(len(l) ** 2 for l in levels[1:]) <= _NESTING_CHECK_BUDGET
        ):
            self._check_nesting()
            checked = True
        elif check not in ("auto", "trust", "full"):
            raise ValueError("check must be 'auto', 'full', or 'trust'")
        object.__setattr__(self, "nesting_checked", checked)

    def __setattr__(self, name, value):
        raise AttributeError("System is immutable")

    def _check_nesting(self) -> None:
        for i in range(len(self.levels) - 1):
            hi, lo = self.levels[i], self.levels[i + 1]
            if not set(sumset(lo, lo).elements) <= set(hi.elements):
                raise ValueError(f"nesting fails between levels {i + 1} and {i}")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, i: int) -> IntSet:
        if i >= len(self.levels):
            raise IndexError(
                f"system depth {self.depth} too shallow; level {i} requested"
            )
        return self.levels[i]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, System)
            and self.ambient == other.ambient
            and self.levels == other.levels
        )

    def __repr__(self) -> str:
        sizes = ",".join(str(len(l)) for l in self.levels)
        return f"System(depth={self.depth}, level_sizes=[{sizes}])"

    def dim_upper(self, through_level: Optional[int] = None, mode: str = "greedy") -> float:
        """Computable bound on the dimension: max over i of
        log2( C(B_i;B_{i+1}) * C(B_{i+1};B_{i+2}) )."""
        last = (through_level if through_level is not None else self.depth) - 2
        worst = 0.0
        for i in range(last + 1):
            c1 = covering_number(self.levels[i], self.levels[i + 1], mode)
            c2 = covering_number(self.levels[i + 1], self.levels[i + 2], mode)
            if c1 == INF or c2 == INF:
                return INF
            worst = max(worst, math.log2(max(1, c1 * c2)))
        return worst


def system_meet(b: System, bp: System) -> System:
    """Levelwise intersection, truncated to the shallower depth."""
    if b.ambient != bp.ambient:
        raise ValueError("ambient mismatch")
    depth = min(len(b.levels), len(bp.levels))
    levels = [b.levels[i].intersection(bp.levels[i]) for i in range(depth)]
    dim = None
    if b.dim_bound is not None and bp.dim_bound is not None:
        dim = b.dim_bound + bp.dim_bound
    return System(b.ambient, levels, dim_bound=dim, check="trust")


def system_dilate(b: System, m: int) -> System:
    """Index shift (B_{i+m})_i; depth shrinks by m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if m > b.depth - 2:
        raise IndexError(f"dilate by {m} needs depth >= {m + 2}, have {b.depth}")
    return System(b.ambient, b.levels[m:], dim_bound=b.dim_bound, check="trust")


def system_multiple(b: System, m: int) -> tuple[System, bool]:
    """Levelwise multiplication by 2^m; flags whether level sizes survived.

    In ambients with 2-torsion the multiplication map can collapse levels;
    the boolean reports size preservation so callers can skip the invariant.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    factor = 2**m
    levels = []
    preserved = True
    for lv in b.levels:
        new = IntSet(b.ambient, (b.ambient.scale(v, factor) for v in lv.elements))
        preserved = preserved and len(new) == len(lv)
        levels.append(new)
    return System(b.ambient, levels, dim_bound=b.dim_bound, check="trust"), preserved


def is_subgroup(h: IntSet) -> bool:
    if h.ambient.is_integers:
        return h.elements == (0,)
    amb = h.ambient
    hs = h._as_set()
    if amb.zero() not in hs:
        return False
    return all(amb.add(a, amb.neg(b)) in hs for a in hs for b in hs)


def subgroup_system(h: IntSet, depth: int = DEFAULT_DEPTH) -> System:
    """Constant system at a verified subgroup; 0-dimensional."""
    if not is_subgroup(h):
        raise ValueError("H is not a subgroup")
    return System(h.ambient, [h] * (depth + 1), dim_bound=0.0, check="trust")


def full_group_system(amb: FiniteAbelian, depth: int = DEFAULT_DEPTH) -> System:
    return subgroup_system(IntSet(amb, amb.elements()), depth)


# Bohr levels use arcs of radius 4, 2, 1, ... on the circle; each arc is
# covered by O(1) translates of the arc two levels down, so the per-frequency
# dimension bound is log2 9.
_BOHR_PER_FREQ_DIM = math.log2(9.0)
_BOUNDARY_TOL = 1e-9


def bohr_level_set(amb: FiniteAbelian, freq, threshold: float) -> tuple[IntSet, int]:
    """{x : |gamma(x) - 1| < threshold}; counts boundary-tolerance hits."""
    members = []
    flagged = 0
    for x in amb.elements():
        d = amb.char_dist(freq, x)
        if abs(d - threshold) < _BOUNDARY_TOL:
            flagged += 1  # boundary hit: excluded by strictness, reported
            continue
        if d < threshold:
            members.append(x)
    return IntSet(amb, members), flagged


def bohr_system(
    amb: FiniteAbelian, frequencies: Sequence, rho: Fraction, depth: int = DEFAULT_DEPTH
) -> System:
    """Meet of per-frequency arc-preimage systems with top radius below rho."""
    rho = Fraction(rho)
    if rho <= 0:
        raise ValueError("rho must be positive")
    frequencies = [tuple(amb.reduce(f)) if not isinstance(f, tuple) else f for f in frequencies]
    m = 0
    while Fraction(4, 2**m) > rho:
        m += 1
    result: Optional[System] = None
    boundary_hits = 0
    for freq in frequencies:
        levels = []
        for i in range(depth + 1):
            lv, flagged = bohr_level_set(amb, freq, 4.0 / 2.0 ** (m + i))
            boundary_hits += flagged
            levels.append(lv)
        per = System(amb, levels, dim_bound=_BOHR_PER_FREQ_DIM, check="trust")
        result = per if result is None else system_meet(result, per)
    if result is None:
        result = full_group_system(amb, depth)
    for freq in frequencies:
        for x in result.levels[0].elements:
            if amb.char_dist(freq, x) >= float(rho) + _BOUNDARY_TOL:
                raise AssertionError("Bohr level 0 leaves the requested radius")
    return result


@dataclass(frozen=True)
class CosetProgression:
    """x_0 + {sum t_j x_j : |t_j| <= N_j} + H."""

    base: object
    generators: tuple
    bounds: tuple[int, ...]
    subgroup: Optional[IntSet]
    ambient: object

    def __post_init__(self):
        if len(self.generators) != len(self.bounds):
            raise ValueError("generator/bound arity mismatch")
        if any(n < 1 for n in self.bounds):
            raise ValueError("bounds must be >= 1")

    @property
    def dimension(self) -> int:
        return len(self.generators)


def _progression_box(cp: CosetProgression, shrink: int) -> IntSet:
    """{sum t_j x_j : |t_j| <= N_j / 2^shrink} + H."""
    amb = cp.ambient
    caps = [n // (2**shrink) for n in cp.bounds]
    combos = [amb.zero()]
    for gen, cap in zip(cp.generators, caps):
        new = []
        for base in combos:
            for t in range(-cap, cap + 1):
                val = amb.add(base, amb.scale(gen, t)) if t >= 0 else amb.add(
                    base, amb.neg(amb.scale(gen, -t))
                )
                new.append(val)
        combos = new
    if cp.subgroup is not None and len(cp.subgroup):
        out = []
        for c in combos:
            for h in cp.subgroup.elements:
                out.append(amb.add(c, h))
        combos = out
    return IntSet(amb, combos)


def coset_progression_system(
    cp: CosetProgression, depth: Optional[int] = None
) -> tuple[System, list[int]]:
    """Levels shrink the box bounds by powers of two; returns the system and,
    per level, the verified size of the explicit 3^d-point cover of B_i by
    B_{i+1} translates (certifying C(B_i;B_{i+1}) <= 3^d)."""
    amb = cp.ambient
    d = cp.dimension
    if depth is None:
        depth = max(2, max((n.bit_length() for n in cp.bounds), default=2) + 1)
    est = math.prod(2 * n + 1 for n in cp.bounds) * max(1, len(cp.subgroup or ()))
    if est > 200_000:
        raise ValueError("progression box too large for dense enumeration")
    levels = [_progression_box(cp, i) for i in range(depth + 1)]
    cover_sizes = []
    for i in range(depth):
        steps = [math.ceil(n / 2 ** (i + 1)) for n in cp.bounds]
        cover = [amb.zero()]
        for gen, c in zip(cp.generators, steps):
            new = []
            for base in cover:
                for sigma in (-1, 0, 1):
                    t = sigma * c
                    val = amb.add(base, amb.scale(gen, t)) if t >= 0 else amb.add(
                        base, amb.neg(amb.scale(gen, -t))
                    )
                    new.append(val)
            cover = new
        cover_set = IntSet(amb, cover)
        covered = set(sumset(cover_set, levels[i + 1]).elements)
        if not set(levels[i].elements) <= covered:
            raise AssertionError("explicit progression cover failed verification")
        cover_sizes.append(len(cover_set))
        if len(cover_set) > 3**d:
            raise AssertionError("progression cover larger than 3^d")
    dim = 2 * d * math.log2(3.0)
    return System(amb, levels, dim_bound=dim, check="auto"), cover_sizes


# ---------------------------------------------------------------------------
# tau-closed pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedPairWitness:
    """(Z, W) with buffers Z- and Z+ certifying near-invariance of Z under W."""

    z: IntSet
    w: IntSet
    z_minus: IntSet
    z_plus: IntSet
    tau: Fraction

    def validate(self) -> list[str]:
        problems = []
        for name, s in (("Z", self.z), ("W", self.w), ("Z-", self.z_minus), ("Z+", self.z_plus)):
            if not s.is_symmetric_neighbourhood():
                problems.append(f"{name} is not a symmetric neighbourhood of 0")
        if len(self.z_minus) and len(self.w):
            if not set(sumset(self.z_minus, self.w).elements) <= set(self.z.elements):
                problems.append("Z- + W leaves Z")
        if len(self.z) and len(self.w):
            if not set(sumset(self.z, self.w).elements) <= set(self.z_plus.elements):
                problems.append("Z + W leaves Z+")
        if len(self.z_plus) > (1 + self.tau) * len(self.z_minus):
            problems.append("|Z+| > (1+tau)|Z-|")
        return problems

    def require_valid(self) -> "ClosedPairWitness":
        problems = self.validate()
        if problems:
            raise ValueError("invalid witness: " + "; ".join(problems))
        return self


def translation_stability(witness: ClosedPairWitness) -> Fraction:
    """max over w in W of the total-variation distance between m_Z and its
    w-shift, computed exactly; at most tau for a valid witness."""
    z = witness.z
    amb = z.ambient
    zset_ = z._as_set()
    worst = Fraction(0)
    for w in witness.w.elements:
        shifted = {amb.add(v, amb.neg(w)) for v in zset_}
        sym_diff = len(zset_ ^ shifted)
        worst = max(worst, Fraction(sym_diff, len(z)))
    return worst


def witness_restrict(witness: ClosedPairWitness, w_sub: IntSet) -> ClosedPairWitness:
    """Shrinking W preserves tau-closure with the same buffers."""
    if not set(w_sub.elements) <= set(witness.w.elements):
        raise ValueError("W' must sit inside W")
    return ClosedPairWitness(witness.z, w_sub, witness.z_minus, witness.z_plus, witness.tau)


def witness_multiple(witness: ClosedPairWitness, m: int) -> ClosedPairWitness:
    """Multiply all four sets by 2^m; exact in ambients without 2-torsion."""
    amb = witness.z.ambient
    if not amb.is_integers and any(n % 2 == 0 for n in amb.orders):
        raise ValueError("2^m multiples of witnesses need odd moduli")
    factor = 2**m

    def mul(s: IntSet) -> IntSet:
        return IntSet(amb, (amb.scale(v, factor) for v in s.elements))

    return ClosedPairWitness(
        mul(witness.z), mul(witness.w), mul(witness.z_minus), mul(witness.z_plus), witness.tau
    )


def subgroup_pair(h: IntSet, tau: Fraction = Fraction(0)) -> ClosedPairWitness:
    """(H, H) is tau-closed for every tau >= 0."""
    if not is_subgroup(h):
        raise ValueError("H is not a subgroup")
    return ClosedPairWitness(h, h, h, h, Fraction(tau)).require_valid()


def regularize(
    z: IntSet, b: System, tau: Fraction
) -> tuple[ClosedPairWitness, int, int]:
    """Find a buffered version of Z that is tau-closed under a deep level of B.

    Pigeonhole over j: the products |Z + (2j+2)B_m| / |Z + 2jB_m| telescope to
    at most K = |Z + B_0| / |Z|, so once K^(1/2^(m-1)) <= 1 + tau some ratio
    is small; the witness is Z_0 = Z + (2j+1)B_m with buffers Z + 2jB_m and
    Z + (2j+2)B_m, and W = B_m.  Guarantees Z inside Z_0 inside Z + B_0 and
    m <= ceil(log2(ln K / ln(1+tau))) + 1 when K > 1 + tau.
    """
    tau = Fraction(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not z.is_symmetric_neighbourhood():
        raise ValueError("Z must be a symmetric neighbourhood of 0")
    if len(z) == 0:
        raise ValueError("Z must be non-empty")
    k_num = len(sumset(z, b.level(0)))
    k = Fraction(k_num, len(z))
    m = 1
    while k > (1 + tau) ** (2 ** (m - 1)):
        m += 1
        if m > b.depth:
            raise IndexError(
                f"system depth {b.depth} too shallow for regularization; need level {m}"
            )
    b_m = b.level(m)
    chain = [z]
    for _ in range(2 ** (m - 1)):
        chain.append(sumset(chain[-1], b_m))
        chain.append(sumset(chain[-1], b_m))
    for j in range(2 ** (m - 1)):
        lo, mid, hi = chain[2 * j], chain[2 * j + 1], chain[2 * j + 2]
        if Fraction(len(hi), len(lo)) <= 1 + tau:
            witness = ClosedPairWitness(mid, b_m, lo, hi, tau).require_valid()
            if not set(z.elements) <= set(mid.elements):
                raise AssertionError("regularized set lost Z")
            if not set(mid.elements) <= set(sumset(z, b.level(0)).elements):
                raise AssertionError("regularized set escaped Z + B_0")
            return witness, m, j
    raise AssertionError("pigeonhole scan found no closing index")


def closed_from_system(b: System, tau: Fraction) -> tuple[ClosedPairWitness, int]:
    """tau-closed pair squeezed between B_1 and B_0 via regularization."""
    witness, m, _ = regularize(b.level(1), system_dilate(b, 1), tau)
    if not set(b.level(1).elements) <= set(witness.z.elements):
        raise AssertionError("closure lost B_1")
    if not set(witness.z.elements) <= set(b.level(0).elements):
        raise AssertionError("closure escaped B_0")
    return witness, m


def closed_chain(b: System, tau: Fraction, k: int) -> list[ClosedPairWitness]:
    """Nested Z_1 contains ... contains Z_k with each (Z_i, Z_{i+1}) tau-closed.

    Built by repeated closure at increasing depths: each Z_{i+1} lands inside
    the W-neighbourhood of the previous witness, so shrinking W preserves the
    closure.  Raises IndexError when the system is too shallow for k links.
    """
    if k < 2:
        raise ValueError("a chain needs k >= 2")
    witnesses: list[ClosedPairWitness] = []
    raw: list[tuple[ClosedPairWitness, int]] = []
    offset = 0
    current = b
    for _ in range(k):
        w, m = closed_from_system(current, tau)
        raw.append((w, m))
        offset = m + 1
        current = system_dilate(current, offset)
    for i in range(k - 1):
        w, _ = raw[i]
        z_next = raw[i + 1][0].z
        if not set(z_next.elements) <= set(w.w.elements):
            raise AssertionError("chain step escaped the previous neighbourhood")
        witnesses.append(witness_restrict(w, z_next))
    return witnesses


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

from .sets import set_from_json, set_to_json  # noqa: E402


def system_to_json(b: System) -> dict:
    return {
        "levels": [set_to_json(l) for l in b.levels],
        "dim_bound": b.dim_bound,
    }


def system_from_json(obj: dict) -> System:
    levels = [set_from_json(l) for l in obj["levels"]]
    return System(levels[0].ambient, levels, dim_bound=obj.get("dim_bound"))


def witness_to_json(w: ClosedPairWitness) -> dict:
    return {
        "Z": set_to_json(w.z),
        "W": set_to_json(w.w),
        "Z_minus": set_to_json(w.z_minus),
        "Z_plus": set_to_json(w.z_plus),
        "tau": str(w.tau),
    }


def witness_from_json(obj: dict) -> ClosedPairWitness:
    return ClosedPairWitness(
        set_from_json(obj["Z"]),
        set_from_json(obj["W"]),
        set_from_json(obj["Z_minus"]),
        set_from_json(obj["Z_plus"]),
        Fraction(obj["tau"]),
    )
