"""Additive energy, symmetry sets, and the hereditary-energy verifiers.

The additive energy E(A) counts quadruples a1 + a2 = a3 + a4.  A set is
nu-hereditarily energetic when every subset S satisfies
E(S) >= nu * |S|^4 / |A|; the best (largest) such nu is the hereditary
coefficient nu*(A), computed here exactly by subset enumeration or bounded
from above by seeded sampling.  The check_* functions verify the quantitative
subset-energy inequalities this package relies on, with the explicit
constants recovered from their proofs rather than O(.) placeholders:

 - small doubling:        E(S)*|S+S| >= |S|^4 for every S of A
 - monotonicity:          nu*(A') >= (|A'|/|A|) * nu*(A)
 - unions:                nu*(A u A') >= min(nu*(A), nu*(A')) / 8
 - symmetry sets:         E(S) >= (nu/2)^4 |S|^4 / |A| for S inside
                          the symmetry set of A at threshold nu/2
 - summing sets:          E(S) >= |S|^4 / (|X| k^4) when every k-subset
                          of A has a distinct-pair sum in X
 - level concentration:   |A \ A_heavy(eps^2 nu*)| <= sqrt(6) eps |A|
 - dilate intersection:   some 1 <= j <= r has |(2^j S) n A| < kappa |A|,
                          or the full intersection profile is returned

All threshold comparisons are exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .constructions import SplitMix64
from .sets import IntSet, dilate, heavy_levels, is_sumfree_wrt, sumset

EXHAUSTIVE_CAP = 16


@dataclass(frozen=True)
class EnergyReport:
    energy: int
    representation_counts: dict

    def check(self) -> None:
        n_sq = sum(self.representation_counts.values())
        assert self.energy == sum(c * c for c in self.representation_counts.values())
        assert int(round(n_sq**0.5)) ** 2 == n_sq


def additive_energy(a: IntSet) -> EnergyReport:
    """E(A) = sum over s of r_{A+A}(s)^2, counting ordered pairs."""
    amb = a.ambient
    counts: dict = {}
    elems = a.elements
    for x in elems:
        for y in elems:
            s = amb.add(x, y)
            counts[s] = counts.get(s, 0) + 1
    return EnergyReport(sum(c * c for c in counts.values()), counts)


def energy_value(a: IntSet) -> int:
    return additive_energy(a).energy


def _subset_energy(sums: list[list], idx: tuple[int, ...]) -> int:
    counts: dict = {}
    for i in idx:
        row = sums[i]
        for j in idx:
            s = row[j]
            counts[s] = counts.get(s, 0) + 1
    return sum(c * c for c in counts.values())


def _pair_table(a: IntSet) -> list[list]:
    amb = a.ambient
    elems = a.elements
    return [[amb.add(x, y) for y in elems] for x in elems]


def _iter_subsets(n: int):
    for mask in range(1, 1 << n):
        idx = tuple(i for i in range(n) if mask >> i & 1)
        yield idx


def symmetry_set(a: IntSet, nu: Fraction) -> IntSet:
    """Shifts x with |A n (A + x)| > nu |A|."""
    nu = Fraction(nu)
    if len(a) == 0:
        raise ValueError("symmetry set of the empty set is undefined")
    amb = a.ambient
    overlaps: dict = {}
    for x in a.elements:
        for y in a.elements:
            d = amb.add(x, amb.neg(y))
            overlaps[d] = overlaps.get(d, 0) + 1
    return IntSet(amb, (d for d, c in overlaps.items() if c > nu * len(a)))


@dataclass(frozen=True)
class HereditaryCoefficient:
    nu_star: Fraction
    witness: IntSet
    mode: str  # "exhaustive" | "sampled"


def hereditary_coefficient(
    a: IntSet, mode: str = "exhaustive", samples: int = 2000, seed: int = 0
) -> HereditaryCoefficient:
    """nu*(A) = min over non-empty S of E(S) |A| / |S|^4.

    Exhaustive mode is exact (|A| <= 16); sampled mode evaluates seeded random
    subsets and returns an upper bound on nu*(A).
    """
    if len(a) == 0:
        raise ValueError("hereditary coefficient of the empty set is undefined")
    n = len(a)
    sums = _pair_table(a)
    if mode == "exhaustive":
        if n > EXHAUSTIVE_CAP:
            raise ValueError(f"exhaustive mode capped at |A| = {EXHAUSTIVE_CAP}; use sampled")
        best: Optional[Fraction] = None
        best_idx: tuple[int, ...] = ()
        for idx in _iter_subsets(n):
            ratio = Fraction(_subset_energy(sums, idx) * n, len(idx) ** 4)
            if best is None or ratio < best:
                best, best_idx = ratio, idx
        witness = IntSet(a.ambient, (a.elements[i] for i in best_idx))
        return HereditaryCoefficient(best, witness, "exhaustive")
    if mode != "sampled":
        raise ValueError("mode must be 'exhaustive' or 'sampled'")
    rng = SplitMix64(seed)
    best = Fraction(energy_value(a), n**3)  # S = A itself
    best_idx = tuple(range(n))
    for _ in range(samples):
        mask = 0
        while mask == 0:
            mask = rng.next_u64() & ((1 << n) - 1)
        idx = tuple(i for i in range(n) if mask >> i & 1)
        ratio = Fraction(_subset_energy(sums, idx) * n, len(idx) ** 4)
        if ratio < best:
            best, best_idx = ratio, idx
    witness = IntSet(a.ambient, (a.elements[i] for i in best_idx))
    return HereditaryCoefficient(best, witness, "sampled")


@dataclass(frozen=True)
class VerificationReport:
    name: str
    ok: bool
    hypothesis_ok: bool
    checked: int
    margin: Optional[Fraction]
    counterexample: Optional[dict]
    notes: dict

    def __bool__(self) -> bool:
        return self.ok


def _subset_iterator(a: IntSet, mode: str, samples: int, seed: int):
    n = len(a)
    if mode == "auto":
        mode = "exhaustive" if n <= EXHAUSTIVE_CAP else "sampled"
    if mode == "exhaustive":
        if n > EXHAUSTIVE_CAP:
            raise ValueError(f"exhaustive subset iteration capped at {EXHAUSTIVE_CAP}")
        return mode, _iter_subsets(n)
    if mode != "sampled":
        raise ValueError("mode must be 'exhaustive', 'sampled', or 'auto'")
    rng = SplitMix64(seed)

    def sampled():
        for _ in range(samples):
            mask = 0
            while mask == 0:
                mask = rng.next_u64() & ((1 << n) - 1)
            yield tuple(i for i in range(n) if mask >> i & 1)

    return mode, sampled()


def check_hed(
    a: IntSet,
    part: int,
    other: Optional[IntSet] = None,
    nu: Optional[Fraction] = None,
    mode: str = "auto",
    samples: int = 2000,
    seed: int = 0,
) -> VerificationReport:
    """Verify one part of the hereditary-energy toolbox on a concrete set.

    part 1: every S of A has E(S) * |S+S| >= |S|^4.
    part 2: with A' = other inside A, nu*(A') >= (|A'|/|A|) nu*(A).
    part 3: with A' = other, nu*(A u A') >= min(nu*(A), nu*(A')) / 8.
    part 4: with nu provided (default E(A)/|A|^3), every S inside the
            symmetry set of A at threshold nu/2 has E(S) >= (nu/2)^4 |S|^4 / |A|.
    """
    if part == 1:
        used_mode, subsets = _subset_iterator(a, mode, samples, seed)
        sums = _pair_table(a)
        checked = 0
        worst: Optional[Fraction] = None
        for idx in subsets:
            checked += 1
            e = _subset_energy(sums, idx)
            ss = len({sums[i][j] for i in idx for j in idx})
            margin = Fraction(e * ss, len(idx) ** 4)
            if worst is None or margin < worst:
                worst = margin
            if e * ss < len(idx) ** 4:
                sub = IntSet(a.ambient, (a.elements[i] for i in idx))
                return VerificationReport(
                    "hed-1", False, True, checked, margin,
                    {"S": sub.elements, "E": e, "sumset": ss}, {"mode": used_mode},
                )
        return VerificationReport("hed-1", True, True, checked, worst, None, {"mode": used_mode})

    if part == 2:
        if other is None:
            raise ValueError("part 2 needs the subset A'")
        if not set(other.elements) <= set(a.elements):
            return VerificationReport(
                "hed-2", True, False, 0, None, None, {"reason": "A' is not a subset of A"}
            )
        nu_a = hereditary_coefficient(a, "exhaustive").nu_star
        nu_sub = hereditary_coefficient(other, "exhaustive").nu_star
        eps = Fraction(len(other), len(a))
        margin = nu_sub - eps * nu_a
        ok = margin >= 0
        ce = None if ok else {"nu_A": str(nu_a), "nu_A'": str(nu_sub), "eps": str(eps)}
        return VerificationReport("hed-2", ok, True, 1, margin, ce, {})

    if part == 3:
        if other is None:
            raise ValueError("part 3 needs the second set A'")
        nu_min = min(
            hereditary_coefficient(a, "exhaustive").nu_star,
            hereditary_coefficient(other, "exhaustive").nu_star,
        )
        union = a.union(other)
        if len(union) > EXHAUSTIVE_CAP:
            raise ValueError("union exceeds the exhaustive cap")
        nu_union = hereditary_coefficient(union, "exhaustive").nu_star
        margin = nu_union - nu_min / 8
        ok = margin >= 0
        ce = None if ok else {"nu_min": str(nu_min), "nu_union": str(nu_union)}
        return VerificationReport("hed-3", ok, True, 1, margin, ce, {})

    if part == 4:
        e_a = energy_value(a)
        if nu is None:
            nu = Fraction(e_a, len(a) ** 3)
        nu = Fraction(nu)
        if e_a < nu * len(a) ** 3:
            return VerificationReport(
                "hed-4", True, False, 0, None, None, {"reason": "E(A) < nu |A|^3"}
            )
        sym = symmetry_set(a, nu / 2)
        bound_coeff = (nu / 2) ** 4 / len(a)
        # E(S) >= |S|^2 always, so sizes below the crossover pass outright.
        sums = _pair_table(sym)
        checked = 0
        worst = None
        n = len(sym)
        trivial_sizes = {s for s in range(1, n + 1) if s * s >= bound_coeff * s**4}
        if set(range(1, n + 1)) <= trivial_sizes:
            return VerificationReport(
                "hed-4", True, True, 0, None, None,
                {"note": "bound below the universal E(S) >= |S|^2 for all sizes",
                 "sym_size": n},
            )
        if n > EXHAUSTIVE_CAP and mode == "auto":
            used_mode, subsets = _subset_iterator(sym, "sampled", samples, seed)
        else:
            used_mode, subsets = _subset_iterator(sym, mode, samples, seed)
        for idx in subsets:
            if len(idx) in trivial_sizes:
                continue
            checked += 1
            e = _subset_energy(sums, idx)
            margin = Fraction(e) - bound_coeff * len(idx) ** 4
            if worst is None or margin < worst:
                worst = margin
            if margin < 0:
                sub = IntSet(sym.ambient, (sym.elements[i] for i in idx))
                return VerificationReport(
                    "hed-4", False, True, checked, margin,
                    {"S": sub.elements, "E": e}, {"mode": used_mode, "sym_size": n},
                )
        return VerificationReport(
            "hed-4", True, True, checked, worst, None, {"mode": used_mode, "sym_size": n}
        )

    raise ValueError("part must be 1, 2, 3, or 4")


def check_hen(
    a: IntSet,
    x: IntSet,
    k: int,
    mode: str = "auto",
    samples: int = 2000,
    seed: int = 0,
    assume_summing: bool = False,
) -> VerificationReport:
    """Hereditary energy of summing sets: E(S) >= |S|^4 / (|X| k^4) for all S.

    The hypothesis (every k-subset of A has a distinct-pair sum in X) is
    established first via the exact solver unless assume_summing is set;
    when it fails the report says so instead of failing.
    """
    from .solver import is_summing

    if len(x) == 0:
        return VerificationReport("hen", True, False, 0, None, None, {"reason": "X empty"})
    if not assume_summing and not is_summing(a, x, k):
        return VerificationReport(
            "hen", True, False, 0, None, None, {"reason": "A is not (k,X)-summing"}
        )
    used_mode, subsets = _subset_iterator(a, mode, samples, seed)
    sums = _pair_table(a)
    denom = len(x) * k**4
    checked = 0
    worst = None
    small_branch = large_branch = 0
    for idx in subsets:
        checked += 1
        e = _subset_energy(sums, idx)
        if len(idx) <= k * k:
            small_branch += 1
        else:
            large_branch += 1
        margin = Fraction(e * denom, len(idx) ** 4)
        if worst is None or margin < worst:
            worst = margin
        if e * denom < len(idx) ** 4:
            sub = IntSet(a.ambient, (a.elements[i] for i in idx))
            return VerificationReport(
                "hen", False, True, checked, margin, {"S": sub.elements, "E": e},
                {"mode": used_mode},
            )
    notes = {"mode": used_mode, "small_branch": small_branch, "large_branch": large_branch}
    return VerificationReport("hen", True, True, checked, worst, None, notes)


def check_energy_lemma(a: IntSet, eps: Fraction) -> VerificationReport:
    """Level concentration: |A \\ A_heavy(eps^2 nu*)| <= sqrt(6) eps |A|.

    nu* is the exact hereditary coefficient, so |A| <= 16.  The square-root
    comparison is done as |A-|^2 <= 6 eps^2 |A|^2 in exact rationals.
    """
    eps = Fraction(eps)
    if not (0 < eps <= 1):
        raise ValueError("eps must lie in (0, 1]")
    if not a.ambient.is_integers:
        raise ValueError("level decomposition needs the integer ambient")
    nu = hereditary_coefficient(a, "exhaustive").nu_star
    threshold = eps * eps * nu
    if threshold > 1:
        threshold = Fraction(1)
    _, heavy = heavy_levels(a, threshold)
    light = len(a) - len(heavy)
    margin = 6 * eps**2 * len(a) ** 2 - light**2
    ok = margin >= 0
    ce = None if ok else {"light": light, "allowed_sq": str(6 * eps**2 * len(a) ** 2)}
    return VerificationReport(
        "energy-lemma", ok, True, 1, margin, ce,
        {"nu_star": str(nu), "light_count": light},
    )


def check_int_lemma(
    a: IntSet, s: IntSet, kappa: Fraction, r: int
) -> tuple[Optional[int], list[int]]:
    """First 1 <= j <= r with |(2^j S) n A| < kappa |A|, plus the full profile.

    A None first component certifies that every dilate keeps a kappa-dense
    intersection, which is the lemma's other alternative.
    """
    kappa = Fraction(kappa)
    if r < 1:
        raise ValueError("r must be >= 1")
    if not a.ambient.is_integers:
        raise ValueError("dilate intersections are defined over the integers here")
    profile = []
    found = None
    aset = a._as_set()
    for j in range(1, r + 1):
        inter = sum(1 for v in dilate(s, 2**j).elements if v in aset)
        profile.append(inter)
        if found is None and inter < kappa * len(a):
            found = j
    return found, profile
