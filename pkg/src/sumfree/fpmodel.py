"""Runnable finite-field model of the density-increment pipeline.

Works in V = F_p^n with p an odd prime.  A weighted cover of a set S is a
finitely supported rational distribution over (coset representative,
subspace) atoms whose averaged uniform measure is exactly m_S; covers
dilate by scalars for free, refine by passing to kernel subspaces of large
Fourier coefficients, and the mean squared density of a reference set A
strictly increases at every refinement.  On top of the cover machinery sit
the exact tuple-counting integrals and their lower-bound checks, plus the
end-to-end pipeline driver that reports, for a concrete instance, which of
the three structural alternatives it exhibits.

Exactness discipline: atom weights, set densities, and the squared-density
functional are exact rationals; only Fourier magnitudes are floating point,
with near-threshold classifications flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .constructions import SplitMix64
from .sets import FiniteAbelian, IntSet
from .systems import ClosedPairWitness

_BOUNDARY_TOL = 1e-9


# ---------------------------------------------------------------------------
# Linear algebra over F_p
# ---------------------------------------------------------------------------


def rref_mod_p(rows: Sequence[Sequence[int]], p: int) -> list[tuple[int, ...]]:
    """Row-reduced echelon form; returns the non-zero rows."""
    mat = [list(r) for r in rows]
    if not mat:
        return []
    ncols = len(mat[0])
    pivot_row = 0
    for col in range(ncols):
        pivot = None
        for r in range(pivot_row, len(mat)):
            if mat[r][col] % p:
                pivot = r
                break
        if pivot is None:
            continue
        mat[pivot_row], mat[pivot] = mat[pivot], mat[pivot_row]
        inv = pow(mat[pivot_row][col], -1, p)
        mat[pivot_row] = [(v * inv) % p for v in mat[pivot_row]]
        for r in range(len(mat)):
            if r != pivot_row and mat[r][col] % p:
                c = mat[r][col] % p
                mat[r] = [(a - c * b) % p for a, b in zip(mat[r], mat[pivot_row])]
        pivot_row += 1
        if pivot_row == len(mat):
            break
    return [tuple(r) for r in mat[:pivot_row] if any(r)]


def nullspace_mod_p(rows: Sequence[Sequence[int]], p: int, ncols: int) -> list[tuple[int, ...]]:
    """Basis of {v : M v = 0} over F_p."""
    red = rref_mod_p(rows, p)
    pivots = []
    for r in red:
        for c, v in enumerate(r):
            if v:
                pivots.append(c)
                break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [0] * ncols
        vec[fcol] = 1
        for r, pcol in zip(red, pivots):
            vec[pcol] = (-r[fcol]) % p
        basis.append(tuple(vec))
    return basis


@dataclass(frozen=True)
class Subspace:
    """Subspace of F_p^n held as a reduced row-echelon basis."""

    p: int
    n: int
    basis: tuple[tuple[int, ...], ...]

    @staticmethod
    def from_vectors(p: int, n: int, vectors: Sequence[Sequence[int]]) -> "Subspace":
        return Subspace(p, n, tuple(rref_mod_p(vectors, p)))

    @staticmethod
    def full(p: int, n: int) -> "Subspace":
        eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        return Subspace(p, n, tuple(tuple(r) for r in eye))

    @staticmethod
    def zero(p: int, n: int) -> "Subspace":
        return Subspace(p, n, ())

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return self.p**self.rank

    def _pivots(self) -> list[int]:
        out = []
        for r in self.basis:
            for c, v in enumerate(r):
                if v:
                    out.append(c)
                    break
        return out

    def reduce(self, vec) -> tuple[int, ...]:
        """Canonical coset representative of vec modulo this subspace."""
        v = [x % self.p for x in vec]
        for row, pcol in zip(self.basis, self._pivots()):
            c = v[pcol]
            if c:
                v = [(a - c * b) % self.p for a, b in zip(v, row)]
        return tuple(v)

    def contains(self, vec) -> bool:
        return not any(self.reduce(vec))

    def elements(self):
        p, n = self.p, self.n
        r = self.rank
        for idx in range(p**r):
            coeffs = []
            rem = idx
            for _ in range(r):
                coeffs.append(rem % p)
                rem //= p
            vec = [0] * n
            for c, row in zip(coeffs, self.basis):
                if c:
                    vec = [(a + c * b) % p for a, b in zip(vec, row)]
            yield tuple(vec)

    def coords(self, vec) -> tuple[int, ...]:
        """Coordinates in the RREF basis (valid only for members)."""
        return tuple(vec[pcol] % self.p for pcol in self._pivots())

    def kernel_refine(self, forms: Sequence[tuple[int, ...]]) -> "Subspace":
        """Intersection with the kernels of coordinate-space linear forms.

        Each form acts on basis coordinates; the result is the subspace of
        members annihilated by every form.
        """
        if not forms:
            return self
        coeff_null = nullspace_mod_p(forms, self.p, self.rank)
        vectors = []
        for coeffs in coeff_null:
            vec = [0] * self.n
            for c, row in zip(coeffs, self.basis):
                if c:
                    vec = [(a + c * b) % self.p for a, b in zip(vec, row)]
            vectors.append(vec)
        return Subspace.from_vectors(self.p, self.n, vectors)


def ambient_for(p: int, n: int) -> FiniteAbelian:
    return FiniteAbelian([p] * n)


# ---------------------------------------------------------------------------
# Weighted covers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverAtom:
    weight: Fraction
    rep: tuple[int, ...]
    sub: Subspace


@dataclass(frozen=True)
class WeightedCover:
    p: int
    n: int
    atoms: tuple[CoverAtom, ...]

    def __post_init__(self):
        total = sum(a.weight for a in self.atoms)
        if total != 1:
            raise ValueError(f"atom weights sum to {total}, not 1")
        if any(a.weight <= 0 for a in self.atoms):
            raise ValueError("atom weights must be positive")

    def measure(self) -> dict:
        """The averaged measure E[m_{rep + sub}] as exact point masses."""
        out: dict = {}
        for atom in self.atoms:
            share = atom.weight / atom.sub.size
            for u in atom.sub.elements():
                pt = tuple((r + x) % self.p for r, x in zip(atom.rep, u))
                out[pt] = out.get(pt, Fraction(0)) + share
        return out

    def min_subspace_size(self) -> int:
        return min(a.sub.size for a in self.atoms)


def atom_canonical(p: int, rep, sub: Subspace) -> tuple[int, ...]:
    return sub.reduce(rep)


def cover_of_set_atoms(p: int, n: int, reps: Sequence, sub: Subspace) -> WeightedCover:
    """Equal-weight cover of (reps + sub) by the given subspace cosets."""
    w = Fraction(1, len(reps))
    atoms = tuple(CoverAtom(w, atom_canonical(p, r, sub), sub) for r in reps)
    return WeightedCover(p, n, atoms)


def point_cover(s: IntSet) -> WeightedCover:
    """Atoms are the points of S with the zero subspace."""
    amb = s.ambient
    p = amb.orders[0]
    n = len(amb.orders)
    zero = Subspace.zero(p, n)
    w = Fraction(1, len(s))
    return WeightedCover(p, n, tuple(CoverAtom(w, v, zero) for v in s.elements))


def cover_check(cover: WeightedCover, s: IntSet) -> bool:
    """Exact test that the averaged measure equals m_S."""
    target = Fraction(1, len(s)) if len(s) else Fraction(0)
    measure = cover.measure()
    s_elems = set(s.elements)
    if set(measure) != s_elems:
        return False
    return all(mass == target for mass in measure.values())


def cover_dilate(cover: WeightedCover, j: int) -> WeightedCover:
    """(2^j z, Z): a weighted cover of the 2^j-dilate of the covered set."""
    if cover.p == 2:
        raise ValueError("dilation by powers of 2 degenerates at p = 2")
    factor = pow(2, j, cover.p)
    atoms = tuple(
        CoverAtom(
            a.weight,
            atom_canonical(cover.p, tuple((factor * r) % cover.p for r in a.rep), a.sub),
            a.sub,
        )
        for a in cover.atoms
    )
    return WeightedCover(cover.p, cover.n, atoms)


def cover_undilate(cover: WeightedCover, j: int) -> WeightedCover:
    inv = pow(pow(2, j, cover.p), -1, cover.p)
    atoms = tuple(
        CoverAtom(
            a.weight,
            atom_canonical(cover.p, tuple((inv * r) % cover.p for r in a.rep), a.sub),
            a.sub,
        )
        for a in cover.atoms
    )
    return WeightedCover(cover.p, cover.n, atoms)


# ---------------------------------------------------------------------------
# Uniformity step and iteration
# ---------------------------------------------------------------------------


def _atom_members(p: int, rep, sub: Subspace) -> list[tuple[int, ...]]:
    return [tuple((r + x) % p for r, x in zip(rep, u)) for u in sub.elements()]


def atom_density(p: int, rep, sub: Subspace, points: frozenset) -> Fraction:
    hits = sum(1 for v in _atom_members(p, rep, sub) if v in points)
    return Fraction(hits, sub.size)


def atom_deviation_sq(p: int, rep, sub: Subspace, points: frozenset) -> Fraction:
    """Squared L2(m_{2 rep + sub}) deviation of the self-convolution of A on
    the atom from its squared density, exactly.

    With a = |A n (rep+U)| and r(y) the ordered representation counts of y
    as a sum of two members, the value is sum_y (r(y)|U| - a^2)^2 / |U|^5.
    """
    members = [v for v in _atom_members(p, rep, sub) if v in points]
    a = len(members)
    size = sub.size
    counts: dict = {}
    for v in members:
        for w in members:
            s = tuple((x + y) % p for x, y in zip(v, w))
            counts[s] = counts.get(s, 0) + 1
    two_rep = tuple((2 * r) % p for r in rep)
    total = 0
    for u in sub.elements():
        y = tuple((a_ + b_) % p for a_, b_ in zip(two_rep, u))
        r_y = counts.get(y, 0)
        total += (r_y * size - a * a) ** 2
    return Fraction(total, size**5)


def _atom_spectrum(p: int, rep, sub: Subspace, points: frozenset, half_delta: float):
    """Coordinate-space characters with |1^_{A'}| >= delta/2, plus flags."""
    r = sub.rank
    grid = np.zeros((p,) * r if r else (1,), dtype=np.float64)
    for v in _atom_members(p, rep, sub):
        if v in points:
            rel = tuple((x - y) % p for x, y in zip(v, rep))
            grid[sub.coords(rel) if r else (0,)] += 1.0
    hat = np.fft.fftn(grid) / sub.size
    mags = np.abs(hat)
    forms = []
    flagged = 0
    it = np.ndindex(*grid.shape)
    for idx in it:
        m = float(mags[idx])
        if abs(m - half_delta) < _BOUNDARY_TOL:
            flagged += 1
            forms.append(tuple(idx) if r else ())
            continue
        if m >= half_delta:
            forms.append(tuple(idx) if r else ())
    return forms, flagged


@dataclass(frozen=True)
class UnifStepResult:
    refined: bool
    cover: WeightedCover
    bad_mass: Fraction
    deviations: tuple
    gamma_sizes: tuple[int, ...]
    boundary_flags: int
    energy_before: Fraction
    energy_after: Fraction


def cover_energy(cover: WeightedCover, points: frozenset) -> Fraction:
    """E[m_{z+Z}(A)^2], exactly."""
    return sum(
        a.weight * atom_density(cover.p, a.rep, a.sub, points) ** 2 for a in cover.atoms
    )


def unif_step(cover: WeightedCover, a: IntSet, delta: Fraction) -> UnifStepResult:
    """One dichotomy step: certify near-uniformity or refine the bad atoms.

    An atom is bad when its L2 self-convolution deviation exceeds delta
    (compared as squares, exactly).  When the bad atoms carry mass more than
    delta, each is replaced by the cosets of the kernel of its large Fourier
    coefficients; the refined cover covers the same set and its mean squared
    density rises by more than delta^3 / 2.  At most 4 delta^-2 characters
    are ever involved per atom.
    """
    delta = Fraction(delta)
    if not (0 < delta):
        raise ValueError("delta must be positive")
    p = cover.p
    points = frozenset(a.elements)
    devs = []
    bad = []
    for atom in cover.atoms:
        d2 = atom_deviation_sq(p, atom.rep, atom.sub, points)
        devs.append(d2)
        if d2 > delta * delta:
            bad.append(atom)
    bad_mass = sum((atom.weight for atom in bad), Fraction(0))
    energy_before = cover_energy(cover, points)
    if bad_mass <= delta:
        return UnifStepResult(
            False, cover, bad_mass, tuple(devs), (), 0, energy_before, energy_before
        )
    half_delta = float(delta) / 2.0
    new_atoms = []
    gamma_sizes = []
    flags = 0
    cap = 4 / (float(delta) ** 2)
    for atom in cover.atoms:
        if atom not in bad:
            new_atoms.append(atom)
            continue
        forms, flagged = _atom_spectrum(p, atom.rep, atom.sub, points, half_delta)
        flags += flagged
        nontrivial = [f for f in forms if any(f)]
        gamma_sizes.append(len(forms))
        if len(forms) > cap + flagged:
            raise AssertionError("spectrum exceeds the 4 delta^-2 Parseval cap")
        refined_sub = atom.sub.kernel_refine(nontrivial)
        reps = sorted(
            {refined_sub.reduce(v) for v in _atom_members(p, atom.rep, atom.sub)}
        )
        share = atom.weight / len(reps)
        for rep in reps:
            new_atoms.append(CoverAtom(share, rep, refined_sub))
    new_cover = WeightedCover(cover.p, cover.n, tuple(new_atoms))
    energy_after = cover_energy(new_cover, points)
    if energy_after < energy_before + bad_mass * delta**2 / 2:
        raise AssertionError("refinement failed to lift the squared-density functional")
    return UnifStepResult(
        True, new_cover, bad_mass, tuple(devs), tuple(gamma_sizes), flags,
        energy_before, energy_after,
    )


@dataclass(frozen=True)
class IterationTrace:
    steps: tuple
    total_refinements: int
    functional_start: Fraction
    functional_end: Fraction
    degenerate: bool


def dilated_functional(cover: WeightedCover, points: frozenset, r: int) -> Fraction:
    """sum over j < r of E[m_{2^j z + Z}(A)^2]; bounded by max(r, 1)."""
    total = Fraction(0)
    for j in range(max(r, 1) if r else 0):
        total += cover_energy(cover_dilate(cover, j), points)
    return total


def uniformize(
    cover: WeightedCover, a: IntSet, delta: Fraction, r: int
) -> tuple[WeightedCover, IterationTrace]:
    """Refine until every dilate 2^j, j < r, passes the uniformity test.

    Round-robin over j; each refinement raises the j-summed squared-density
    functional by more than delta^3 / 2, and the functional never exceeds
    r + 1, so at most ceil(2 (r+1) / delta^3) refinements can occur.
    """
    delta = Fraction(delta)
    if r < 0:
        raise ValueError("r must be >= 0")
    points = frozenset(a.elements)
    if r == 0:
        f0 = dilated_functional(cover, points, 0)
        return cover, IterationTrace((), 0, f0, f0, False)
    cap = math.ceil(2 * (r + 1) / float(delta) ** 3)
    steps = []
    refinements = 0
    f_start = dilated_functional(cover, points, r)
    f_prev = f_start
    while True:
        clean_pass = True
        for j in range(r):
            dilated = cover_dilate(cover, j)
            result = unif_step(dilated, a, delta)
            if result.refined:
                clean_pass = False
                refinements += 1
                cover = cover_undilate(result.cover, j)
                f_now = dilated_functional(cover, points, r)
                if f_now < f_prev:
                    raise AssertionError("dilated functional decreased")
                if f_now - f_prev < delta**3 / 2:
                    raise AssertionError("refinement gained less than delta^3 / 2")
                steps.append(
                    {
                        "j": j,
                        "bad_mass": result.bad_mass,
                        "gamma_sizes": result.gamma_sizes,
                        "functional": f_now,
                        "min_subspace": cover.min_subspace_size(),
                    }
                )
                f_prev = f_now
                if refinements > cap:
                    raise AssertionError("refinement count exceeded the termination cap")
        if clean_pass:
            break
    degenerate = cover.min_subspace_size() == 1
    return cover, IterationTrace(tuple(steps), refinements, f_start, f_prev, degenerate)


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------


def count_tuples(
    x,
    sub: Subspace,
    a: IntSet,
    xset: IntSet,
    k: int,
    mode: str = "exact",
    samples: int = 20000,
    seed: int = 0,
):
    """Q = P(all z_i in A, z_i + z_j outside X) for independent uniform
    z_1, ..., z_k on the coset x + U.

    (Sums z_i + z_j automatically stay in 2x + U, so only the X-avoidance
    binds.)  Exact mode enumerates A-members of the coset with pairwise
    pruning and divides by |U|^k; Monte Carlo mode is seeded.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    p = a.ambient.orders[0]
    points = frozenset(a.elements)
    forbidden = frozenset(xset.elements)
    members = [v for v in _atom_members(p, x, sub) if v in points]
    if mode == "exact":
        if sub.size**k > 10**8:
            raise ValueError("exact tuple budget |U|^k exceeded; use Monte Carlo")
        count = 0
        chosen: list = []

        def rec(start_unused: int) -> None:
            nonlocal count
            if len(chosen) == k:
                count += 1
                return
            for v in members:
                ok = True
                for u in chosen:
                    s = tuple((a_ + b_) % p for a_, b_ in zip(u, v))
                    if s in forbidden:
                        ok = False
                        break
                if ok:
                    chosen.append(v)
                    rec(0)
                    chosen.pop()

        rec(0)
        return Fraction(count, sub.size**k)
    if mode != "monte-carlo":
        raise ValueError("mode must be 'exact' or 'monte-carlo'")
    rng = SplitMix64(seed)
    all_members = _atom_members(p, x, sub)
    hits = 0
    for _ in range(samples):
        draw = [all_members[rng.next_below(len(all_members))] for _ in range(k)]
        if any(v not in points for v in draw):
            continue
        ok = True
        for i in range(k):
            for j in range(i + 1, k):
                s = tuple((a_ + b_) % p for a_, b_ in zip(draw[i], draw[j]))
                if s in forbidden:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            hits += 1
    return hits / samples


@dataclass(frozen=True)
class CountBoundReport:
    name: str
    ok: bool
    hypothesis_ok: bool
    q: Optional[Fraction]
    bound: Optional[Fraction]
    margin: Optional[Fraction]
    details: dict

    def __bool__(self) -> bool:
        return self.ok


def ct_bound_check(x, sub: Subspace, a: IntSet, xset: IntSet, k: int, eps: Fraction) -> CountBoundReport:
    """Q >= alpha^k (1 - eps k (k-1)) under computed uniformity hypotheses.

    Hypotheses (all verified, not assumed): alpha = density of A on x + U;
    the measure of X on 2x + U is at most eps; and the L2 self-convolution
    deviation of A on the atom is at most eps alpha^2 (compared as squares).
    """
    eps = Fraction(eps)
    p = a.ambient.orders[0]
    points = frozenset(a.elements)
    alpha = atom_density(p, x, sub, points)
    two_x = tuple((2 * r) % p for r in x)
    x_mass = atom_density(p, two_x, sub, frozenset(xset.elements))
    dev_sq = atom_deviation_sq(p, x, sub, points)
    details = {"alpha": alpha, "x_mass": x_mass, "dev_sq": dev_sq}
    if x_mass > eps:
        return CountBoundReport(
            "ct-bound", True, False, None, None, None,
            dict(details, reason="X too heavy on 2x+U"),
        )
    if dev_sq > (eps * alpha * alpha) ** 2:
        return CountBoundReport(
            "ct-bound", True, False, None, None, None,
            dict(details, reason="atom is not eps alpha^2 uniform"),
        )
    q = count_tuples(x, sub, a, xset, k)
    bound = alpha**k * (1 - eps * k * (k - 1))
    return CountBoundReport("ct-bound", q >= bound, True, q, bound, q - bound, details)


def lemma_c_check(
    a: IntSet,
    xset: IntSet,
    z0,
    witnesses: Sequence[ClosedPairWitness],
    alpha: Fraction,
    tau: Fraction,
    eps: Fraction,
    delta: Fraction,
    k: int,
) -> CountBoundReport:
    """Exact chain-counting bound over a nested family of almost-closed sets.

    Takes tau-closed pairs (Z_1, Z_2), ..., (Z_{k-1}, Z_k) with the Z_i
    nested, and verifies, after computing hypotheses (density of A - z0 near
    alpha on every Z_i; X - 2 z0 of measure at most eps on each Z_i, i < k;
    L2 self-convolution deviation at most delta between every pair i < j):

        I >= (alpha - 2 tau)^k - C(k,2) (alpha + tau)^(k-2) (eps alpha^2 + sqrt(eps delta))

    where I integrates, over z_i uniform on Z_i, the indicator that every
    z_i lands in A - z0 and every pairwise sum stays in Z_i and avoids
    X - 2 z0.  The square root is eliminated by squaring, so the comparison
    is exact.
    """
    alpha, tau, eps, delta = map(Fraction, (alpha, tau, eps, delta))
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(witnesses) != k - 1:
        raise ValueError("need exactly k - 1 closed pairs")
    amb = a.ambient
    z_chain = [w.z for w in witnesses] + [witnesses[-1].w]
    details: dict = {}
    for w in witnesses:
        problems = w.validate()
        if problems:
            raise ValueError("invalid witness: " + "; ".join(problems))
        if w.tau > tau:
            return CountBoundReport(
                "lemma-c", True, False, None, None, None,
                {"reason": f"witness tau {w.tau} exceeds {tau}"},
            )
    for i in range(k - 1):
        if not set(z_chain[i + 1].elements) <= set(z_chain[i].elements):
            return CountBoundReport(
                "lemma-c", True, False, None, None, None,
                {"reason": f"chain not nested at position {i}"},
            )
    z0 = amb.reduce(z0)
    a_shift = frozenset(amb.add(v, amb.neg(z0)) for v in a.elements)
    two_z0 = amb.scale(z0, 2)
    x_shift = frozenset(amb.add(v, amb.neg(two_z0)) for v in xset.elements)

    dens = [Fraction(sum(1 for v in z.elements if v in a_shift), len(z)) for z in z_chain]
    details["densities"] = dens
    if any(abs(d - alpha) > tau for d in dens):
        return CountBoundReport(
            "lemma-c", True, False, None, None, None,
            dict(details, reason="density hypothesis fails"),
        )
    x_mass = [
        Fraction(sum(1 for v in z.elements if v in x_shift), len(z)) for z in z_chain[:-1]
    ]
    details["x_mass"] = x_mass
    if any(m > eps for m in x_mass):
        return CountBoundReport(
            "lemma-c", True, False, None, None, None,
            dict(details, reason="X-measure hypothesis fails"),
        )
    worst_dev = Fraction(0)
    for i in range(k):
        zi = z_chain[i]
        a_zi_set = frozenset(v for v in zi.elements if v in a_shift)
        for j in range(i + 1, k):
            zj = z_chain[j]
            a_zj = [v for v in zj.elements if v in a_shift]
            total = Fraction(0)
            for y in zi.elements:
                c = sum(1 for z in a_zj if amb.add(y, amb.neg(z)) in a_zi_set)
                total += (Fraction(c, len(zj)) - alpha * alpha) ** 2
            dev = total / len(zi)
            worst_dev = max(worst_dev, dev)
    details["worst_dev"] = worst_dev
    if worst_dev > delta:
        return CountBoundReport(
            "lemma-c", True, False, None, None, None,
            dict(details, reason="L2 uniformity hypothesis fails"),
        )

    sets = [frozenset(z.elements) for z in z_chain]
    count = 0
    total_tuples = math.prod(len(z) for z in z_chain)
    chosen: list = []

    def rec(i: int) -> None:
        nonlocal count
        if i == k:
            count += 1
            return
        for v in z_chain[i].elements:
            if v not in a_shift:
                continue
            ok = True
            for idx in range(i):
                s = amb.add(chosen[idx], v)
                if s not in sets[idx] or s in x_shift:
                    ok = False
                    break
            if ok:
                chosen.append(v)
                rec(i + 1)
                chosen.pop()

    rec(0)
    integral = Fraction(count, total_tuples)
    details["integral"] = integral

    main = max(Fraction(0), alpha - 2 * tau) ** k
    coeff = Fraction(math.comb(k, 2)) * (alpha + tau) ** (k - 2)
    # I >= main - coeff (eps alpha^2 + sqrt(eps delta)): move the rational
    # parts across and square to compare exactly.
    lhs = main - coeff * eps * alpha**2 - integral
    ok = lhs <= 0 or lhs * lhs <= coeff * coeff * eps * delta
    bound_float = main - coeff * (eps * alpha**2 + Fraction(float(math.sqrt(eps * delta))))
    details["alternatives"] = {
        "delta_vs_k2_alpha4": float(delta * k * k / alpha**4) if alpha else None,
        "tau_vs_k_alpha": float(tau * k / alpha) if alpha else None,
        "eps_vs_k2": float(eps * k * k),
    }
    return CountBoundReport("lemma-c", ok, True, integral, bound_float, integral - bound_float, details)


# ---------------------------------------------------------------------------
# Pipeline driver
# ---------------------------------------------------------------------------


def _subspaces_of_codim(p: int, n: int, codim: int) -> list[Subspace]:
    """All subspaces of F_p^n of the given codimension, via form sets."""
    if codim == 0:
        return [Subspace.full(p, n)]
    # normalized non-zero forms (first non-zero entry 1), one per line
    forms = []
    for idx in range(p**n):
        vec = []
        rem = idx
        for _ in range(n):
            vec.append(rem % p)
            rem //= p
        if not any(vec):
            continue
        first = next(v for v in vec if v)
        if first != 1:
            continue
        forms.append(tuple(vec))
    out = {}
    from itertools import combinations

    for combo in combinations(forms, codim):
        red = rref_mod_p(combo, p)
        if len(red) != codim:
            continue
        key = tuple(red)
        if key in out:
            continue
        basis = nullspace_mod_p(list(red), p, n)
        out[key] = Subspace.from_vectors(p, n, basis)
    return list(out.values())


@dataclass(frozen=True)
class StructureResult:
    sub: Subspace
    reps: tuple
    s_set: IntSet
    density: Fraction
    codim: int


def dense_coset_structure(a: IntSet, max_codim: int = 1) -> StructureResult:
    """Desk-scale stand-in for the structure-finding step: exhaust subspaces
    of small codimension and take the union of the cosets on which A is
    densest.

    The output contract downstream steps rely on: S is a union of cosets of
    the subspace, and the density of A on S is at least the density of A in
    the whole space.
    """
    amb = a.ambient
    p = amb.orders[0]
    n = len(amb.orders)
    points = frozenset(a.elements)
    best: Optional[StructureResult] = None
    for codim in range(max_codim + 1):
        for sub in _subspaces_of_codim(p, n, codim):
            buckets: dict = {}
            for v in amb.elements():
                buckets.setdefault(sub.reduce(v), 0)
            for v in points:
                buckets[sub.reduce(v)] += 1
            top = max(buckets.values())
            density = Fraction(top, sub.size)
            if best is None or (density, -codim) > (best.density, -best.codim):
                reps = tuple(sorted(r for r, c in buckets.items() if c == top))
                members = []
                for r in reps:
                    members.extend(_atom_members(p, r, sub))
                best = StructureResult(sub, reps, IntSet(amb, members), density, codim)
    assert best is not None
    return best


def model_pipeline(
    a: IntSet,
    xset: IntSet,
    k: int,
    r: int,
    delta: Fraction,
    max_codim: int = 1,
    eps0: Optional[Fraction] = None,
) -> dict:
    """End-to-end desk-scale run of the structure / uniformize / count loop.

    Stages: check the summing hypothesis exactly (a found witness ends the
    run: it is the object the whole argument hunts for); locate a dense
    coset structure S with its subspace cover; uniformize the cover for all
    dilates below r; then walk the per-atom mass-propagation step, invoking
    the counting bound wherever X is light on the next dilate.  Everything
    measured lands in the returned report, including which of the three
    structural alternatives the instance exhibits under desk-scale reading.
    """
    from .solver import max_sumfree_subset

    amb = a.ambient
    p = amb.orders[0]
    if p % 2 == 0:
        raise ValueError("the model needs odd p")
    delta = Fraction(delta)
    if eps0 is None:
        eps0 = Fraction(1, 2 * k * k)
    report: dict = {
        "p": p,
        "n": len(amb.orders),
        "k": k,
        "r": r,
        "delta": str(delta),
        "eps0": str(eps0),
        "sizes": {"A": len(a), "X": len(xset)},
    }
    eta = Fraction(len(xset.difference(a)), len(a)) if len(a) else Fraction(0)
    report["eta"] = str(eta)

    solve = max_sumfree_subset(a, xset)
    if solve.size >= k:
        witness = solve.witness.elements[:k]
        report["summing"] = False
        report["witness"] = [list(v) for v in witness]
        report["outcome"] = "not-summing: admissible k-subset found"
        return report
    report["summing"] = True

    structure = dense_coset_structure(a, max_codim=max_codim)
    report["structure"] = {
        "codim": structure.codim,
        "coset_count": len(structure.reps),
        "S_size": len(structure.s_set),
        "density_on_S": str(structure.density),
    }
    cover = cover_of_set_atoms(p, len(amb.orders), structure.reps, structure.sub)
    if not cover_check(cover, structure.s_set):
        raise AssertionError("structure cover is not an exact cover of S")

    cover, trace = uniformize(cover, a, delta, r)
    if not cover_check(cover, structure.s_set):
        raise AssertionError("uniformized cover drifted off S")
    report["uniformize"] = {
        "refinements": trace.total_refinements,
        "cap": math.ceil(2 * (r + 1) / float(delta) ** 3),
        "functional_start": str(trace.functional_start),
        "functional_end": str(trace.functional_end),
        "degenerate": trace.degenerate,
        "min_subspace": cover.min_subspace_size(),
    }

    points = frozenset(a.elements)
    x_points = frozenset(xset.elements)
    walk = []
    for idx, atom in enumerate(cover.atoms):
        per_atom = {"atom": idx, "weight": str(atom.weight), "subspace": atom.sub.size, "steps": []}
        for s in range(r):
            factor = pow(2, s, p)
            rep_s = tuple((factor * v) % p for v in atom.rep)
            rep_next = tuple((2 * factor * v) % p for v in atom.rep)
            a_mass = atom_density(p, rep_s, atom.sub, points)
            x_next = atom_density(p, rep_next, atom.sub, x_points)
            entry = {"s": s, "A_mass": str(a_mass), "X_mass_next": str(x_next)}
            if x_next <= eps0 and a_mass > 0:
                check = ct_bound_check(rep_s, atom.sub, a, xset, k, eps0)
                entry["counting"] = {
                    "hypothesis_ok": check.hypothesis_ok,
                    "ok": bool(check.ok),
                    "Q": str(check.q) if check.q is not None else None,
                }
                entry["branch"] = "counting"
            else:
                entry["branch"] = "propagation"
            per_atom["steps"].append(entry)
        walk.append(per_atom)
    report["walk"] = walk

    dilate_table = {}
    s_points = frozenset(structure.s_set.elements)
    for j in range(1, r + 1):
        factor = pow(2, j, p)
        dilated = {tuple((factor * c) % p for c in v) for v in s_points}
        inter = len(dilated & points)
        dilate_table[j] = {
            "intersection": inter,
            "ratio": str(Fraction(inter, len(dilated))),
        }
    report["dilate_intersections"] = dilate_table

    min_ratio = min(
        (Fraction(d["intersection"], len(s_points)) for d in dilate_table.values()),
        default=Fraction(0),
    )
    if eta > Fraction(1, 4 * max(1, r) * k):
        exhibited = "eta-large"
    elif r >= 1 and min_ratio > 0:
        exhibited = "dilate-intersection"
    else:
        exhibited = "size-bound"
    report["exhibited"] = exhibited
    report["min_dilate_ratio"] = str(min_ratio)
    report["outcome"] = "completed"
    return report
