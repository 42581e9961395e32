"""Discrete Fourier analysis on finite abelian groups.

Dense complex tables indexed by mixed radix carry functions and measures;
the transform pairs f with f^(t) = sum_x f(x) conj(gamma_t(x)) where
gamma_t(x) = exp(2 pi i sum t_j x_j / n_j).  On top of the transform sit the
large spectrum Spec_eps (characters with |mu^| > eps), approximate
annihilators Ann(W, eps) (characters within eps of 1 on all of W), the
spectrum/annihilator inclusion check for almost-closed pairs, and the
almost-orthogonality argument that covers a spectrum by few annihilator
translates and packages them into a Bohr system.

Transforms run in double precision; every strict-threshold classification
within 1e-9 of its boundary is counted and reported rather than silently
decided.  Quantities that are rational (set densities, convolution values
against uniform measures) are computed exactly in Fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .sets import FiniteAbelian, IntSet
from .systems import (
    ClosedPairWitness,
    System,
    bohr_system,
    full_group_system,
)

_BOUNDARY_TOL = 1e-9
_MAX_TRANSFORM_ORDER = 2**20


class DenseFunction:
    """Complex-valued function on a finite abelian group, stored densely."""

    __slots__ = ("ambient", "values")

    def __init__(self, ambient: FiniteAbelian, values):
        if ambient.order > _MAX_TRANSFORM_ORDER:
            raise ValueError("group too large for dense transforms (limit 2^20)")
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (ambient.order,):
            raise ValueError("value table must have one entry per group element")
        self.ambient = ambient
        self.values = values

    def __getitem__(self, elem):
        return self.values[self.ambient.encode(self.ambient.reduce(elem))]

    def total_mass(self) -> complex:
        return complex(self.values.sum())


def indicator(a: IntSet) -> DenseFunction:
    amb = a.ambient
    if amb.is_integers:
        raise ValueError("dense tables need a finite ambient")
    vals = np.zeros(amb.order, dtype=np.complex128)
    for v in a.elements:
        vals[amb.encode(v)] = 1.0
    return DenseFunction(amb, vals)


def uniform_measure(z: IntSet) -> DenseFunction:
    """m_Z: mass 1/|Z| on each point of Z."""
    if len(z) == 0:
        raise ValueError("uniform measure of the empty set is undefined")
    f = indicator(z)
    f.values /= len(z)
    return f


def density_measure(f: IntSet | DenseFunction, z: IntSet) -> DenseFunction:
    """f dm_Z: the measure with density f against m_Z."""
    base = indicator(f) if isinstance(f, IntSet) else f
    out = np.zeros_like(base.values)
    amb = base.ambient
    for v in z.elements:
        idx = amb.encode(v)
        out[idx] = base.values[idx] / len(z)
    return DenseFunction(amb, out)


def _grid(amb: FiniteAbelian, values: np.ndarray) -> np.ndarray:
    return values.reshape(amb.orders)


def dft(f: DenseFunction) -> DenseFunction:
    """f^(t) = sum_x f(x) conj(gamma_t(x)); satisfies Plancherel with 1/|G|."""
    spectrum = np.fft.fftn(_grid(f.ambient, f.values)).reshape(-1)
    return DenseFunction(f.ambient, spectrum)


def idft(fhat: DenseFunction) -> DenseFunction:
    values = np.fft.ifftn(_grid(fhat.ambient, fhat.values)).reshape(-1)
    return DenseFunction(fhat.ambient, values)


def convolve(f: DenseFunction, g: DenseFunction) -> DenseFunction:
    """Counting convolution f*g(x) = sum_z f(z) g(x - z)."""
    if f.ambient != g.ambient:
        raise ValueError("ambient mismatch")
    fa = np.fft.fftn(_grid(f.ambient, f.values))
    ga = np.fft.fftn(_grid(g.ambient, g.values))
    vals = np.fft.ifftn(fa * ga).reshape(-1)
    return DenseFunction(f.ambient, vals)


@dataclass(frozen=True)
class Spectrum:
    """Characters where the transform strictly exceeds the threshold."""

    threshold: float
    members: IntSet
    coefficients: dict
    boundary_flags: tuple

    def __len__(self) -> int:
        return len(self.members)


def spec(mu: DenseFunction, eps) -> Spectrum:
    """Spec_eps(mu) = {t : |mu^(t)| > eps}, flagging near-boundary values."""
    eps_f = float(eps)
    amb = mu.ambient
    hat = dft(mu).values
    mags = np.abs(hat)
    members = []
    coeffs = {}
    flagged = []
    for idx in range(amb.order):
        m = mags[idx]
        t = amb.decode(idx)
        if abs(m - eps_f) < _BOUNDARY_TOL:
            flagged.append(t)
            continue
        if m > eps_f:
            members.append(t)
            coeffs[t] = complex(hat[idx])
    return Spectrum(eps_f, IntSet(amb, members), coeffs, tuple(flagged))


def ann(w: IntSet, eps) -> tuple[IntSet, tuple]:
    """Ann(W, eps) = {t : |gamma_t(x) - 1| < eps for all x in W}, with flags.

    eps <= 0 denotes the limiting case: the exact annihilator subgroup
    {t : gamma_t = 1 on W}.
    """
    amb = w.ambient
    if amb.is_integers:
        raise ValueError("annihilators need a finite ambient")
    eps_f = float(eps)
    members = []
    flagged = []
    if len(w) == 0:
        return IntSet(amb, amb.elements()), ()
    w_vecs = np.array([list(v) for v in w.elements], dtype=np.float64)
    orders = np.array(amb.orders, dtype=np.float64)
    exact_mode = eps_f <= 0
    for idx in range(amb.order):
        t = amb.decode(idx)
        phases = (w_vecs @ (np.array(t, dtype=np.float64) / orders)) % 1.0
        dists = 2.0 * np.abs(np.sin(np.pi * phases))
        worst = float(dists.max())
        if exact_mode:
            if worst < _BOUNDARY_TOL:
                members.append(t)
            continue
        if abs(worst - eps_f) < _BOUNDARY_TOL:
            flagged.append(t)
            continue
        if worst < eps_f:
            members.append(t)
    return IntSet(amb, members), tuple(flagged)


@dataclass(frozen=True)
class InclusionReport:
    ok: bool
    spectrum_size: int
    annihilator_size: int
    worst_slack: float
    boundary_flags: int
    details: dict

    def __bool__(self) -> bool:
        return self.ok


def check_inv(witness: ClosedPairWitness, kappa) -> InclusionReport:
    """Spec_kappa(m_Z) sits inside Ann(W, tau/kappa) for a tau-closed pair."""
    problems = witness.validate()
    if problems:
        raise ValueError("invalid witness: " + "; ".join(problems))
    kappa = Fraction(kappa)
    if not (0 < kappa <= 1):
        raise ValueError("kappa must lie in (0, 1]")
    amb = witness.z.ambient
    radius = witness.tau / kappa
    spectrum = spec(uniform_measure(witness.z), float(kappa))
    if float(radius) >= 2 - _BOUNDARY_TOL:
        return InclusionReport(
            True, len(spectrum), amb.order, 0.0, len(spectrum.boundary_flags),
            {"vacuous": "annihilator radius >= 2 covers the whole dual"},
        )
    annihilator, flagged = ann(witness.w, float(radius))
    ann_set = annihilator._as_set()
    worst = 0.0
    ok = True
    for t in spectrum.members:
        dmax = max(amb.char_dist(t, x) for x in witness.w.elements) if len(witness.w) else 0.0
        worst = max(worst, dmax - float(radius))
        if t not in ann_set and all(t != f for f in flagged):
            ok = False
    return InclusionReport(
        ok, len(spectrum), len(annihilator), worst,
        len(spectrum.boundary_flags) + len(flagged),
        {"radius": float(radius)},
    )


def parseval_spectrum_cover(
    f: DenseFunction,
    witness: ClosedPairWitness,
    eps,
    delta,
    depth: int = 16,
) -> tuple[IntSet, System, dict]:
    """Cover Spec_eps(f dm_Z) by few annihilator translates and a Bohr system.

    Greedily selects a maximal set Lambda of spectrum characters whose
    translates of Ann(W, 2 eps^-2 tau) are pairwise disjoint; almost
    orthogonality forces |Lambda| <= 2 eps^-2, and the spectrum sits inside
    Lambda + Ann(W, 4 eps^-2 tau).  The returned system is the meet of the
    per-character Bohr systems at radius delta, and the final inclusion
    Spec_eps(f dm_Z) inside Ann(B_0 n W, 4 eps^-2 tau + delta) is re-verified
    exhaustively.
    """
    witness.require_valid()
    eps = Fraction(eps)
    delta = Fraction(delta)
    if not (0 < delta <= Fraction(1, 2)):
        raise ValueError("delta must lie in (0, 1/2]")
    amb = f.ambient
    z = witness.z
    norm_sq = sum(abs(f[v]) ** 2 for v in z.elements) / len(z)
    if norm_sq > 1 + 1e-9:
        raise ValueError("f must have L2(m_Z) norm at most 1")
    mu = DenseFunction(amb, f.values * 0)
    for v in z.elements:
        mu.values[amb.encode(v)] = f[v] / len(z)
    spectrum = spec(mu, float(eps))

    small_radius = 2 * eps**-2 * witness.tau
    big_radius = 4 * eps**-2 * witness.tau
    if float(small_radius) >= 2:
        ann_small = IntSet(amb, amb.elements())
    else:
        ann_small, _ = ann(witness.w, float(small_radius))
    ann_small_set = ann_small._as_set()

    ordered = sorted(
        spectrum.members.elements,
        key=lambda t: (-abs(spectrum.coefficients[t]), t),
    )
    lam: list = []
    occupied: set = set()
    for t in ordered:
        translate = {amb.add(t, u) for u in ann_small_set}
        if not translate & occupied:
            lam.append(t)
            occupied |= translate
    lam_set = IntSet(amb, lam)
    cap = 2 * eps**-2
    if len(lam) > cap:
        raise AssertionError("almost-orthogonal family exceeds the 2 eps^-2 cap")

    # pairwise disjointness re-check
    translates = [frozenset(amb.add(t, u) for u in ann_small_set) for t in lam]
    for i in range(len(translates)):
        for j in range(i + 1, len(translates)):
            if translates[i] & translates[j]:
                raise AssertionError("annihilator translates overlap")

    # covering inclusion with the doubled radius
    if float(big_radius) >= 2:
        ann_big = IntSet(amb, amb.elements())
    else:
        ann_big, _ = ann(witness.w, float(big_radius))
    cover = set()
    for t in lam:
        for u in ann_big.elements:
            cover.add(amb.add(t, u))
    missing = [t for t in spectrum.members.elements if t not in cover]
    if missing:
        raise AssertionError(f"spectrum escapes the annihilator cover: {missing[:3]}")

    nontrivial = [t for t in lam if any(t)]
    if nontrivial:
        system = bohr_system(amb, nontrivial, delta, depth=depth)
    else:
        system = full_group_system(amb, depth)

    final_radius = float(big_radius + delta)
    base = system.levels[0].intersection(witness.w)
    worst = 0.0
    for t in spectrum.members.elements:
        if len(base):
            worst = max(worst, max(amb.char_dist(t, x) for x in base.elements))
    if worst >= final_radius + _BOUNDARY_TOL and len(base):
        raise AssertionError("spectrum escapes Ann(B_0 n W, 4 eps^-2 tau + delta)")
    report = {
        "spectrum_size": len(spectrum),
        "lambda_size": len(lam),
        "lambda_cap": float(cap),
        "final_radius": final_radius,
        "worst_final_distance": worst,
        "boundary_flags": len(spectrum.boundary_flags),
    }
    return lam_set, system, report


# ---------------------------------------------------------------------------
# Density-increment diagnostics
# ---------------------------------------------------------------------------


def _count_conv(points: Sequence, shift_set: frozenset, target_set: frozenset, amb) -> dict:
    """c(x) = #{z in shift_set : x - z in target_set} for x in points."""
    out = {}
    for x in points:
        c = 0
        for z in shift_set:
            if amb.add(x, amb.neg(z)) in target_set:
                c += 1
        out[x] = c
    return out


@dataclass(frozen=True)
class IncrementDiagnostics:
    lhs: Fraction
    rhs_core: Fraction
    margin: Fraction
    slack_terms: dict
    l1_chain_ok: bool
    l1_value: Fraction
    l1_bound: Fraction
    preconditions: dict
    z_prime_size: int


def increment_diagnostics(
    a: IntSet,
    w01: ClosedPairWitness,
    w12: ClosedPairWitness,
    alpha,
    eps,
    delta,
    depth: int = 12,
) -> IncrementDiagnostics:
    """Both sides of the local L2 density-increment inequality, exactly.

    Takes tau-closed pairs (Z0, Z1) and (Z1, Z2), a density alpha near the
    density of A on Z0 and Z1, and the two free parameters.  Produces the
    Bohr system from the spectrum cover of 1_A on (Z1, Z2), sets
    Z' = Z2 n B_0, and reports

        lhs  = ||1_A * m_{Z'} - alpha||^2 over m_{Z0}
        core = ||1_{A n Z0} * (1_A dm_{Z1}) - alpha^2||^2 over m_{Z0}

    together with the slack terms eps^2, eps^-2 tau, delta whose absolute
    constants the argument leaves unpinned (margin = lhs - core may be
    negative by at most a constant multiple of their sum).  The constant-free
    L1 sub-chain

        ||1_{Z0} * (1_A dm_{Z1}) - alpha||_{L1(m_{Z0})}
            <= |m_{Z1}(A) - alpha| + max(alpha, 1-alpha) m_{Z0}(Z0 \\ Z0-)

    is exact and is checked pass/fail.
    """
    w01.require_valid()
    w12.require_valid()
    if w01.w != w12.z:
        raise ValueError("witness chain mismatch: W of (Z0,Z1) must equal Z of (Z1,Z2)")
    alpha = Fraction(alpha)
    tau = max(w01.tau, w12.tau)
    amb = a.ambient
    z0, z1, z2 = w01.z, w01.w, w12.w

    m0 = Fraction(len(a.intersection(z0)), len(z0))
    m1 = Fraction(len(a.intersection(z1)), len(z1))
    pre = {
        "m_Z0_margin": m0 - alpha,
        "m_Z1_margin": m1 - alpha,
        "tau": tau,
    }
    if abs(m0 - alpha) > tau or abs(m1 - alpha) > tau:
        raise ValueError("alpha must be within tau of the density of A on Z0 and Z1")

    _, system, _ = parseval_spectrum_cover(indicator(a), w12, eps, delta, depth=depth)
    z_prime = z2.intersection(system.levels[0])
    if len(z_prime) == 0:
        raise AssertionError("Z2 n B_0 is empty (0 should always belong)")

    a_set = a._as_set()
    az0 = frozenset(v for v in z0.elements if v in a_set)
    az1 = frozenset(v for v in z1.elements if v in a_set)
    zp = frozenset(z_prime.elements)

    # lhs: 1_A * m_{Z'}(x) = |{z in Z' : x - z in A}| / |Z'|
    c_lhs = _count_conv(z0.elements, zp, a_set, amb)
    lhs = sum((Fraction(c, len(z_prime)) - alpha) ** 2 for c in c_lhs.values())
    lhs = Fraction(lhs, len(z0))

    # core: 1_{A n Z0} * (1_A dm_{Z1})(x) = |{z in A n Z1 : x - z in A n Z0}| / |Z1|
    c_core = _count_conv(z0.elements, az1, az0, amb)
    core = sum((Fraction(c, len(z1)) - alpha * alpha) ** 2 for c in c_core.values())
    core = Fraction(core, len(z0))

    # constant-free L1 sub-chain
    c_l1 = _count_conv(z0.elements, az1, frozenset(z0.elements), amb)
    l1 = Fraction(
        sum(abs(Fraction(c, len(z1)) - alpha) for c in c_l1.values()), len(z0)
    )
    outside = len(z0) - len(z0.intersection(w01.z_minus))
    l1_bound = abs(m1 - alpha) + max(alpha, 1 - alpha) * Fraction(outside, len(z0))

    eps = Fraction(eps)
    slack = {
        "eps_sq": eps * eps,
        "tau_over_eps_sq": tau * eps**-2,
        "delta": Fraction(delta),
    }
    return IncrementDiagnostics(
        lhs=lhs,
        rhs_core=core,
        margin=lhs - core,
        slack_terms=slack,
        l1_chain_ok=l1 <= l1_bound,
        l1_value=l1,
        l1_bound=l1_bound,
        preconditions=pre,
        z_prime_size=len(z_prime),
    )


def cyclic_embedding(a: IntSet, modulus: int) -> IntSet:
    """Image of an integer set inside Z/modulus (must be injective)."""
    if not a.ambient.is_integers:
        raise ValueError("embedding starts from an integer set")
    amb = FiniteAbelian([modulus])
    image = IntSet(amb, ((v % modulus,) for v in a.elements))
    if len(image) != len(a):
        raise ValueError("embedding is not injective at this modulus")
    return image
