"""Exact set arithmetic over the integers and over finite abelian groups.

Carries the basic objects everything else builds on: an ambient group
(either Z or a product of cyclic groups), finite subsets of it, sumsets,
restricted sumsets, dilates, the 2-adic level decomposition and heavy-level
extraction.  Integers are kept inside the signed 64-bit range so that the
structured constructions stay exactly representable; arithmetic that would
leave the range raises instead of wrapping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

# Dense tables (Fourier, convolution) index group elements by mixed radix,
# so the total order has to stay addressable.
MAX_DENSE_ORDER = 2**24


class Integers:
    """The ambient group Z."""

    __slots__ = ()

    is_integers = True
    orders: tuple[int, ...] | None = None

    def __repr__(self) -> str:
        return "Z"

    def __eq__(self, other) -> bool:
        return isinstance(other, Integers)

    def __hash__(self) -> int:
        return hash("Z")

    def zero(self):
        return 0

    def reduce(self, x):
        x = int(x)
        _check64(x)
        return x

    def add(self, a, b):
        s = a + b
        _check64(s)
        return s

    def neg(self, a):
        return -a

    def scale(self, a, k: int):
        s = a * k
        _check64(s)
        return s


class FiniteAbelian:
    """A finite abelian group given as a product of cyclic groups Z/n_1 x ... x Z/n_d."""

    __slots__ = ("orders",)

    is_integers = False

    def __init__(self, orders: Sequence[int]):
        orders = tuple(int(n) for n in orders)
        if not orders:
            raise ValueError("FiniteAbelian needs at least one modulus")
        if any(n < 2 for n in orders):
            raise ValueError("moduli must be >= 2")
        if math.prod(orders) > MAX_DENSE_ORDER:
            raise ValueError(f"group order {math.prod(orders)} exceeds dense budget 2^24")
        self.orders = orders

    def __repr__(self) -> str:
        return "Z/" + "xZ/".join(str(n) for n in self.orders)

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteAbelian) and self.orders == other.orders

    def __hash__(self) -> int:
        return hash(self.orders)

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    def zero(self):
        return (0,) * len(self.orders)

    def reduce(self, x):
        if isinstance(x, int):
            if len(self.orders) != 1:
                raise ValueError("bare integer element in a multi-factor group")
            return (x % self.orders[0],)
        if len(x) != len(self.orders):
            raise ValueError("element arity does not match the group")
        return tuple(int(r) % n for r, n in zip(x, self.orders))

    def add(self, a, b):
        return tuple((x + y) % n for x, y, n in zip(a, b, self.orders))

    def neg(self, a):
        return tuple((-x) % n for x, n in zip(a, self.orders))

    def scale(self, a, k: int):
        return tuple((x * k) % n for x, n in zip(a, self.orders))

    def encode(self, a) -> int:
        """Mixed-radix encoding to a single index in [0, |G|)."""
        idx = 0
        for r, n in zip(a, self.orders):
            idx = idx * n + r
        return idx

    def decode(self, idx: int):
        out = []
        for n in reversed(self.orders):
            out.append(idx % n)
            idx //= n
        return tuple(reversed(out))

    def elements(self):
        for idx in range(self.order):
            yield self.decode(idx)

    def char_phase(self, t, x) -> Fraction:
        """Phase of the character indexed by t at x, as a fraction of a full turn."""
        ph = Fraction(0)
        for ti, xi, n in zip(t, x, self.orders):
            ph += Fraction(ti * xi, n)
        return ph % 1

    def char_dist(self, t, x) -> float:
        """|gamma_t(x) - 1| = 2|sin(pi * phase)|."""
        return 2.0 * abs(math.sin(math.pi * float(self.char_phase(t, x))))


Ambient = Integers | FiniteAbelian
Z = Integers()


def _check64(x: int) -> None:
    if x < INT64_MIN or x > INT64_MAX:
        raise OverflowError(f"value {x} leaves the signed 64-bit range")


class IntSet:
    """A finite subset of an ambient group, stored sorted and duplicate-free.

    Immutable; over Z elements are plain ints, over a finite group they are
    residue tuples.  ``GroupSet`` is the same type with a finite ambient.
    """

    __slots__ = ("ambient", "elements", "_fset")

    def __init__(self, ambient: Ambient, elements: Iterable):
        reduced = {ambient.reduce(x) for x in elements}
        object.__setattr__(self, "ambient", ambient)
        object.__setattr__(self, "elements", tuple(sorted(reduced)))
        object.__setattr__(self, "_fset", None)

    def __setattr__(self, name, value):
        raise AttributeError("IntSet is immutable")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x) -> bool:
        try:
            return self.ambient.reduce(x) in self._as_set()
        except (ValueError, OverflowError):
            return False

    def _as_set(self) -> frozenset:
        if self._fset is None:
            object.__setattr__(self, "_fset", frozenset(self.elements))
        return self._fset

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IntSet)
            and self.ambient == other.ambient
            and self.elements == other.elements
        )

    def __hash__(self) -> int:
        return hash((self.ambient, self.elements))

    def __repr__(self) -> str:
        inner = ", ".join(map(str, self.elements[:12]))
        if len(self.elements) > 12:
            inner += f", ... ({len(self.elements)} elements)"
        return f"IntSet({self.ambient}, {{{inner}}})"

    def union(self, other: "IntSet") -> "IntSet":
        _same_ambient(self, other)
        return IntSet(self.ambient, self.elements + other.elements)

    def intersection(self, other: "IntSet") -> "IntSet":
        _same_ambient(self, other)
        return IntSet(self.ambient, self._as_set() & other._as_set())

    def difference(self, other: "IntSet") -> "IntSet":
        _same_ambient(self, other)
        return IntSet(self.ambient, self._as_set() - other._as_set())

    def translate(self, x) -> "IntSet":
        amb = self.ambient
        x = amb.reduce(x)
        return IntSet(amb, (amb.add(a, x) for a in self.elements))

    def negate(self) -> "IntSet":
        return IntSet(self.ambient, (self.ambient.neg(a) for a in self.elements))

    def is_symmetric_neighbourhood(self) -> bool:
        """True when the set contains 0 and equals its own negation."""
        s = self._as_set()
        return self.ambient.zero() in s and all(self.ambient.neg(a) in s for a in s)


GroupSet = IntSet


def _same_ambient(a: IntSet, b: IntSet) -> None:
    if a.ambient != b.ambient:
        raise ValueError(f"ambient mismatch: {a.ambient} vs {b.ambient}")


def zset(elements: Iterable[int]) -> IntSet:
    """Convenience constructor for subsets of Z."""
    return IntSet(Z, elements)


def sumset(a: IntSet, b: IntSet) -> IntSet:
    """{x + y : x in A, y in B}."""
    _same_ambient(a, b)
    amb = a.ambient
    return IntSet(amb, (amb.add(x, y) for x in a.elements for y in b.elements))


def difference_set(a: IntSet, b: IntSet) -> IntSet:
    """{x - y : x in A, y in B}."""
    return sumset(a, b.negate())


def restricted_sumset(s: IntSet) -> IntSet:
    """All sums x + y over pairs of distinct elements of S."""
    amb = s.ambient
    elems = s.elements
    out = set()
    for i, x in enumerate(elems):
        for y in elems[i + 1 :]:
            out.add(amb.add(x, y))
    return IntSet(amb, out)


def dilate(a: IntSet, lam: int) -> IntSet:
    """{lam * x : x in A}.  Over Z requires lam >= 1; modular otherwise."""
    amb = a.ambient
    if amb.is_integers and lam < 1:
        raise ValueError("dilation factor over Z must be >= 1")
    return IntSet(amb, (amb.scale(x, lam) for x in a.elements))


def is_sumfree_wrt(s: IntSet, x: IntSet) -> bool:
    """True iff no sum of two distinct elements of S lands in X."""
    _same_ambient(s, x)
    amb = s.ambient
    xset = x._as_set()
    elems = s.elements
    for i, u in enumerate(elems):
        for v in elems[i + 1 :]:
            if amb.add(u, v) in xset:
                return False
    return True


def two_adic_valuation(z: int) -> int | float:
    """Level i with 2^i || z; 0 maps to the infinite level."""
    if z == 0:
        return math.inf
    return (z & -z).bit_length() - 1


@dataclass(frozen=True)
class TwoAdicDecomposition:
    """Partition of an integer set by exact power-of-2 divisibility."""

    levels: dict

    def level(self, i) -> IntSet:
        return self.levels.get(i, zset(()))

    def union(self) -> IntSet:
        out = []
        for part in self.levels.values():
            out.extend(part.elements)
        return zset(out)


def two_adic_decompose(a: IntSet) -> TwoAdicDecomposition:
    """Split A by 2-adic valuation; 0 (if present) sits at the infinite level."""
    if not a.ambient.is_integers:
        raise ValueError("2-adic decomposition needs the integer ambient")
    buckets: dict = {}
    for z in a.elements:
        buckets.setdefault(two_adic_valuation(z), []).append(z)
    return TwoAdicDecomposition({i: zset(v) for i, v in buckets.items()})


def heavy_levels(a: IntSet, eps: Fraction) -> tuple[frozenset, IntSet]:
    """Indices of 2-adic levels holding more than eps*|A| elements, and their union."""
    eps = Fraction(eps)
    if not (0 < eps <= 1):
        raise ValueError("eps must lie in (0, 1]")
    if not a.ambient.is_integers:
        raise ValueError("heavy levels need the integer ambient")
    if len(a) == 0:
        raise ValueError("heavy levels of the empty set are undefined")
    dec = two_adic_decompose(a)
    heavy = {i for i, part in dec.levels.items() if len(part) > eps * len(a)}
    merged = []
    for i in heavy:
        merged.extend(dec.levels[i].elements)
    return frozenset(heavy), zset(merged)


# ---------------------------------------------------------------------------
# Set file format: JSON {"group": "Z" | [n_1, ..., n_d], "elements": [...]}
# or, for Z only, plain text with one integer per line.
# ---------------------------------------------------------------------------


def set_to_json(a: IntSet) -> dict:
    if a.ambient.is_integers:
        return {"group": "Z", "elements": list(a.elements)}
    return {"group": list(a.ambient.orders), "elements": [list(e) for e in a.elements]}


def set_from_json(obj: dict) -> IntSet:
    try:
        group = obj["group"]
        elements = obj["elements"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed set object: {exc}") from exc
    if group == "Z":
        return zset(int(e) for e in elements)
    amb = FiniteAbelian(group)
    return IntSet(amb, elements)


def load_set(path: str) -> IntSet:
    """Read a set file, accepting the JSON schema or one integer per line."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return set_from_json(json.loads(text))
    values = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        values.append(int(line))
    return zset(values)


def save_set(a: IntSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(set_to_json(a), fh)
        fh.write("\n")
