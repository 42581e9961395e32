"""Batch command line: compute, verify, construct, and run the model pipeline.

Subcommands emit a versioned JSON run report ("schema": 1) echoing the
command, a digest of the inputs, the seed, per-operation results, and
timings.  Payloads are byte-identical across reruns with the same inputs and
seed (timings live in a separate key excluded from that contract).

Exit codes: 0 ok / verified, 1 counterexample found, 2 invalid input,
3 budget exhausted without a certificate.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from . import constructions, energy
from .sets import FiniteAbelian, IntSet, load_set, set_to_json, zset
from .solver import greedy_sumfree, max_sumfree_subset

EXIT_OK = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3

SCHEMA_VERSION = 1


def _resolve_set(spec: str) -> IntSet:
    """A set argument is a file path or a generator spec string."""
    if ":" in spec and not spec.endswith(".json"):
        try:
            return constructions.from_spec(spec)
        except ValueError:
            pass
    try:
        return load_set(spec)
    except OSError as exc:
        raise ValueError(f"cannot read set {spec!r}: {exc}") from exc


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(json.dumps(part, sort_keys=True, default=str).encode())
    return h.hexdigest()[:16]


def _report(args, results: dict, verdicts: dict, t0: float, seed=None) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": " ".join(sys.argv[1:]) if sys.argv[1:] else args.command,
        "input_digest": _digest(results.get("inputs", {})),
        "seed": seed,
        "results": results,
        "verdicts": verdicts,
        "timings": {"wall_s": round(time.monotonic() - t0, 6)},
    }


def _emit(report: dict, args) -> None:
    payload = json.dumps(report, indent=2, sort_keys=True, default=str)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    if getattr(args, "format", "json") == "csv":
        flat = report["verdicts"]
        print("key,value")
        for k, v in sorted(flat.items()):
            print(f"{k},{v}")
    else:
        print(payload)


def cmd_mset(args) -> int:
    t0 = time.monotonic()
    a = _resolve_set(args.set)
    x = _resolve_set(args.x) if args.x else a
    res = max_sumfree_subset(
        a,
        x,
        node_budget=args.budget_nodes,
        time_budget_s=args.budget_ms / 1000.0 if args.budget_ms else None,
        jobs=args.jobs,
    )
    results = {
        "inputs": {"A": set_to_json(a), "X": set_to_json(x)},
        "size": res.size,
        "witness": set_to_json(res.witness),
        "optimal": res.optimal,
        "nodes": res.nodes_explored,
    }
    if args.heuristic:
        g = greedy_sumfree(a, x, seed=args.seed or 0)
        results["greedy_size"] = len(g)
        results["greedy_witness"] = set_to_json(g)
    report = _report(args, results, {"size": res.size, "optimal": res.optimal}, t0, args.seed)
    _emit(report, args)
    return EXIT_OK if res.optimal else EXIT_BUDGET


def cmd_energy(args) -> int:
    t0 = time.monotonic()
    a = _resolve_set(args.set)
    rep = energy.additive_energy(a)
    results = {
        "inputs": {"A": set_to_json(a)},
        "energy": rep.energy,
        "distinct_sums": len(rep.representation_counts),
    }
    report = _report(args, results, {"energy": rep.energy}, t0, args.seed)
    _emit(report, args)
    return EXIT_OK


def cmd_decompose(args) -> int:
    t0 = time.monotonic()
    from .sets import two_adic_decompose

    a = _resolve_set(args.set)
    dec = two_adic_decompose(a)
    levels = {
        ("inf" if level == float("inf") else str(level)): list(part.elements)
        for level, part in sorted(dec.levels.items(), key=lambda kv: (kv[0] == float("inf"), kv[0]))
    }
    results = {"inputs": {"A": set_to_json(a)}, "levels": levels}
    report = _report(args, results, {"level_count": len(levels)}, t0, args.seed)
    _emit(report, args)
    return EXIT_OK


def cmd_construct(args) -> int:
    t0 = time.monotonic()
    spec = args.family + (":" + ",".join(args.params) if args.params else "")
    a = constructions.from_spec(spec)
    results = {"inputs": {"spec": spec}, "set": set_to_json(a), "size": len(a)}
    report = _report(args, results, {"size": len(a)}, t0, args.seed)
    _emit(report, args)
    return EXIT_OK


def cmd_model(args) -> int:
    t0 = time.monotonic()
    if args.p % 2 == 0 or args.p < 3:
        raise ValueError("p must be an odd prime")
    from .fpmodel import ambient_for, model_pipeline
    from .constructions import SplitMix64

    amb = ambient_for(args.p, args.n)
    seed = args.seed if args.seed is not None else 0

    def build(spec: str) -> IntSet:
        if spec.startswith("random:"):
            alpha = Fraction(spec.split(":", 1)[1])
            rng = SplitMix64(seed)
            return IntSet(amb, [v for v in amb.elements() if rng.bernoulli(alpha)])
        if spec.startswith("subspace:"):
            from .fpmodel import Subspace, nullspace_mod_p

            forms = []
            body = spec.split(":", 1)[1]
            if body:
                for chunk in body.split(";"):
                    forms.append(tuple(int(c) for c in chunk.split(",")))
            basis = (
                nullspace_mod_p(forms, args.p, args.n)
                if forms
                else [[1 if i == j else 0 for j in range(args.n)] for i in range(args.n)]
            )
            sub = Subspace.from_vectors(args.p, args.n, basis)
            return IntSet(amb, sub.elements())
        return load_set(spec)

    a = build(args.a)
    x = build(args.x) if args.x else a
    rep = model_pipeline(a, x, args.k, args.r, Fraction(args.delta))
    results = {"inputs": {"A": set_to_json(a), "X": set_to_json(x)}, "pipeline": rep}
    report = _report(args, results, {"outcome": rep["outcome"]}, t0, args.seed)
    _emit(report, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _all_subsets_of_range(lo: int, hi: int):
    universe = list(range(lo, hi + 1))
    n = len(universe)
    for mask in range(1, 1 << n):
        yield [universe[i] for i in range(n) if mask >> i & 1]


def _verify_sumset_bound(args, rng) -> tuple[bool, list, int]:
    from .sets import restricted_sumset

    checked = 0
    bad = []
    hi = args.exhaustive_max
    for elems in _all_subsets_of_range(1, hi):
        if len(elems) < 2:
            continue
        checked += 1
        s = zset(elems)
        if len(restricted_sumset(s)) < 2 * len(s) - 3:
            bad.append({"S": elems})
    for _ in range(args.random):
        size = 2 + rng.next_below(63)
        elems = set()
        while len(elems) < size:
            elems.add(rng.next_below(10**6) - 5 * 10**5)
        checked += 1
        s = zset(elems)
        if len(restricted_sumset(s)) < 2 * len(s) - 3:
            bad.append({"S": sorted(elems)})
    return not bad, bad, checked


def _verify_hed_part(part: int):
    def run(args, rng) -> tuple[bool, list, int]:
        checked = 0
        bad = []
        hi = args.exhaustive_max
        for elems in _all_subsets_of_range(0, hi):
            s = zset(elems)
            checked += 1
            if part in (2, 3):
                other = zset(elems[: max(1, len(elems) // 2)])
                rep = energy.check_hed(s, part, other=other)
            else:
                rep = energy.check_hed(s, part)
            if rep.hypothesis_ok and not rep.ok:
                bad.append({"A": elems, "report": rep.counterexample})
        return not bad, bad, checked

    return run


def _verify_hen(args, rng) -> tuple[bool, list, int]:
    checked = 0
    bad = []
    for elems in _all_subsets_of_range(0, args.exhaustive_max):
        if not elems:
            continue
        s = zset(elems)
        checked += 1
        rep = energy.check_hen(s, s, 2)
        if rep.hypothesis_ok and not rep.ok:
            bad.append({"A": elems, "report": rep.counterexample})
    return not bad, bad, checked


def _verify_energy(args, rng) -> tuple[bool, list, int]:
    checked = 0
    bad = []
    grid = [Fraction(1, 8), Fraction(1, 4), Fraction(3, 8), Fraction(1, 2)]
    for elems in _all_subsets_of_range(0, args.exhaustive_max):
        if not elems:
            continue
        s = zset(elems)
        for eps in grid:
            checked += 1
            rep = energy.check_energy_lemma(s, eps)
            if not rep.ok:
                bad.append({"A": elems, "eps": str(eps)})
    return not bad, bad, checked


def _verify_int(args, rng) -> tuple[bool, list, int]:
    # Either a sparse dilate exists or the certificate explains why not;
    # the outcome is always consistent, so verify internal consistency.
    checked = 0
    bad = []
    for _ in range(max(50, args.random)):
        size = 3 + rng.next_below(10)
        elems = set()
        while len(elems) < size:
            elems.add(1 + rng.next_below(200))
        a = zset(elems)
        j, profile = energy.check_int_lemma(a, a, Fraction(1, 4), 4)
        checked += 1
        if j is not None and not profile[j - 1] * 4 < len(a):
            bad.append({"A": sorted(elems), "j": j, "profile": profile})
    return not bad, bad, checked


def _verify_inv(args, rng) -> tuple[bool, list, int]:
    from .fourier import check_inv
    from .systems import bohr_system, regularize

    amb = FiniteAbelian([args.modulus])
    checked = 0
    bad = []
    for trial in range(10):
        freq = (1 + rng.next_below(args.modulus - 1),)
        b = bohr_system(amb, [freq], Fraction(1, 2), depth=18)
        radius = 2 + rng.next_below(max(2, args.modulus // 16))
        z = IntSet(amb, [((i) % args.modulus,) for i in range(-radius, radius + 1)])
        try:
            witness, _, _ = regularize(z, b, Fraction(1, 4))
        except IndexError:
            continue
        for kappa in (Fraction(n, 10) for n in range(1, 10)):
            checked += 1
            rep = check_inv(witness, kappa)
            if not rep.ok:
                bad.append({"trial": trial, "kappa": str(kappa)})
    return not bad, bad, checked


def _verify_pars(args, rng) -> tuple[bool, list, int]:
    import numpy as np

    from .fourier import indicator, parseval_spectrum_cover
    from .systems import bohr_system, regularize

    amb = FiniteAbelian([args.modulus])
    checked = 0
    bad = []
    for trial in range(5):
        freq = (1 + rng.next_below(args.modulus - 1),)
        b = bohr_system(amb, [freq], Fraction(1, 2), depth=18)
        radius = 3 + rng.next_below(max(2, args.modulus // 16))
        z = IntSet(amb, [((i) % args.modulus,) for i in range(-radius, radius + 1)])
        try:
            witness, _, _ = regularize(z, b, Fraction(1, 4))
        except IndexError:
            continue
        dens = Fraction(1, 2)
        a = IntSet(amb, [(i,) for i in range(args.modulus) if rng.bernoulli(dens)])
        f = indicator(a)
        norm = np.sqrt(max(1e-12, sum(abs(f[v]) ** 2 for v in witness.z.elements) / len(witness.z)))
        f.values = f.values / max(1.0, norm)
        checked += 1
        try:
            _, _, rep = parseval_spectrum_cover(f, witness, Fraction(1, 4), Fraction(1, 4))
            if rep["lambda_size"] > rep["lambda_cap"]:
                bad.append({"trial": trial, "report": rep})
        except AssertionError as exc:
            bad.append({"trial": trial, "error": str(exc)})
    return not bad, bad, checked


def _verify_ubreg(args, rng) -> tuple[bool, list, int]:
    import math as _math

    from .systems import bohr_system, regularize, translation_stability

    amb = FiniteAbelian([args.modulus])
    checked = 0
    bad = []
    for trial in range(args.random or 20):
        freq = (1 + rng.next_below(args.modulus - 1),)
        b = bohr_system(amb, [freq], Fraction(1, 2), depth=20)
        radius = 2 + rng.next_below(max(2, args.modulus // 8))
        z = IntSet(amb, [((i) % args.modulus,) for i in range(-radius, radius + 1)])
        tau = Fraction(1, 4)
        try:
            witness, m, _ = regularize(z, b, tau)
        except IndexError:
            continue
        checked += 1
        k = len(zset_sumset_size(z, b.level(0))) / len(z)
        bound = _math.ceil(_math.log2(max(1e-9, _math.log(k) / _math.log(1 + float(tau))))) + 1 if k > 1 + float(tau) else 1
        ok = (
            witness.validate() == []
            and translation_stability(witness) <= tau
            and m <= max(1, bound)
        )
        if not ok:
            bad.append({"trial": trial, "m": m, "bound": bound})
    return not bad, bad, checked


def zset_sumset_size(z: IntSet, b0: IntSet):
    from .sets import sumset

    return sumset(z, b0)


def _verify_ct(args, rng) -> tuple[bool, list, int]:
    from .fpmodel import Subspace, ambient_for, ct_bound_check

    checked = 0
    bad = []
    for p, n in ((3, 1), (3, 2), (5, 1)):
        amb = ambient_for(p, n)
        full = Subspace.full(p, n)
        elems = list(amb.elements())
        for trial in range(30):
            a = IntSet(amb, [v for v in elems if rng.bernoulli(Fraction(3, 5))])
            x = IntSet(amb, [v for v in elems if rng.bernoulli(Fraction(1, 10))])
            for k in (2, 3):
                rep = ct_bound_check(tuple([0] * n), full, a, x, k, Fraction(1, 8))
                checked += 1
                if rep.hypothesis_ok and not rep.ok:
                    bad.append({"p": p, "n": n, "k": k, "A": a.elements, "X": x.elements})
    return not bad, bad, checked


def _verify_lemma_c(args, rng) -> tuple[bool, list, int]:
    from .fpmodel import lemma_c_check
    from .systems import subgroup_pair

    amb = FiniteAbelian([45])
    h = IntSet(amb, [(i,) for i in range(0, 45, 9)])
    w = subgroup_pair(h, Fraction(1, 4))
    checked = 0
    bad = []
    for trial in range(args.random or 50):
        a = IntSet(amb, [(i,) for i in range(45) if rng.bernoulli(Fraction(1, 2))])
        x = IntSet(amb, [(i,) for i in range(45) if rng.bernoulli(Fraction(1, 20))])
        alpha = Fraction(len(a), 45)
        for k in (2, 3):
            rep = lemma_c_check(
                a, x, (rng.next_below(45),), [w] * (k - 1), alpha,
                Fraction(1, 4), Fraction(1, 4), Fraction(1, 2), k,
            )
            checked += 1
            if rep.hypothesis_ok and not rep.ok:
                bad.append({"trial": trial, "k": k})
    return not bad, bad, checked


VERIFIERS = {
    "sumset-bound": _verify_sumset_bound,
    "hed1": _verify_hed_part(1),
    "hed2": _verify_hed_part(2),
    "hed3": _verify_hed_part(3),
    "hed4": _verify_hed_part(4),
    "hen": _verify_hen,
    "energy": _verify_energy,
    "int": _verify_int,
    "inv": _verify_inv,
    "pars": _verify_pars,
    "ubreg": _verify_ubreg,
    "ct": _verify_ct,
    "lemma-c": _verify_lemma_c,
}


def cmd_verify(args) -> int:
    t0 = time.monotonic()
    from .constructions import SplitMix64

    rng = SplitMix64(args.seed if args.seed is not None else 0)
    runner = VERIFIERS[args.lemma]
    ok, counterexamples, checked = runner(args, rng)
    results = {
        "inputs": {
            "lemma": args.lemma,
            "exhaustive_max": args.exhaustive_max,
            "random": args.random,
            "modulus": args.modulus,
        },
        "checked": checked,
        "counterexamples": counterexamples,
    }
    report = _report(args, results, {"verified": ok, "checked": checked}, t0, args.seed)
    _emit(report, args)
    return EXIT_OK if ok else EXIT_COUNTEREXAMPLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumfree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--budget-nodes", dest="budget_nodes", type=int, default=None)
        p.add_argument("--budget-ms", dest="budget_ms", type=int, default=None)

    p = sub.add_parser("mset", help="largest admissible subset")
    p.add_argument("set", help="set file or generator spec")
    p.add_argument("--x", help="reference set X (default: the set itself)")
    p.add_argument("--heuristic", action="store_true", help="also run the greedy")
    common(p)
    p.set_defaults(func=cmd_mset)

    p = sub.add_parser("verify", help="run a lemma verifier over a corpus")
    p.add_argument("lemma", choices=sorted(VERIFIERS))
    p.add_argument("--exhaustive-max", dest="exhaustive_max", type=int, default=9)
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--modulus", type=int, default=64)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("model", help="finite-field pipeline run")
    p.add_argument("p", type=int)
    p.add_argument("n", type=int)
    p.add_argument("--a", required=True, help="set file, random:ALPHA, or subspace:FORMS")
    p.add_argument("--x", help="same forms as --a; defaults to A")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--delta", default="3/10")
    common(p)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("construct", help="emit a generated set")
    p.add_argument("family")
    p.add_argument("params", nargs="*")
    common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("energy", help="additive energy of a set")
    p.add_argument("set")
    common(p)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("decompose", help="2-adic level decomposition")
    p.add_argument("set")
    common(p)
    p.set_defaults(func=cmd_decompose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OverflowError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
