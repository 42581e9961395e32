"""Instance generators: structured and random integer sets with known properties.

Families: consecutive powers of two (conflict-free under restricted sums),
the classical digit construction of progression-free sets, seeded random
dense subsets of an interval, plain intervals and arithmetic progressions.
Randomness comes from splitmix64 so corpora reproduce bit-for-bit across
platforms.
"""

from __future__ import annotations

from fractions import Fraction

from .sets import IntSet, zset

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 PRNG (Steele-Lea-Flood finalizer); stable across platforms."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def bernoulli(self, p: Fraction) -> bool:
        """Exact Bernoulli(p) for rational p via integer threshold."""
        p = Fraction(p)
        if p <= 0:
            return False
        if p >= 1:
            return True
        # P(u < t) = t / 2^64; error < 2^-64 is absorbed by flooring the threshold.
        threshold = (p.numerator << 64) // p.denominator
        return self.next_u64() < threshold

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


def powers_of_two(n: int) -> IntSet:
    """{2^0, ..., 2^(n-1)}; any two distinct members sum outside the set."""
    if not 1 <= n <= 62:
        raise OverflowError("powers_of_two needs 1 <= n <= 62")
    return zset(1 << i for i in range(n))


def behrend(d: int, n: int) -> IntSet:
    """Digit construction of a set with no 3-term arithmetic progression.

    Takes the most populous squared-norm class of {0,...,d-1}^n (ties to the
    smallest norm) and reads each vector as digits base 2d, so sums of two
    members never carry.
    """
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    if (2 * d) ** n > 2**60:
        raise OverflowError("behrend parameters exceed the 64-bit budget")
    counts: dict[int, int] = {}
    for idx in range(d**n):
        x, r = idx, 0
        for _ in range(n):
            digit = x % d
            r += digit * digit
            x //= d
        counts[r] = counts.get(r, 0) + 1
    best_r = min(r for r, c in counts.items() if c == max(counts.values()))
    out = []
    for idx in range(d**n):
        x, r, value, mult = idx, 0, 0, 1
        for _ in range(n):
            digit = x % d
            r += digit * digit
            value += digit * mult
            mult *= 2 * d
            x //= d
        if r == best_r:
            out.append(value)
    return zset(out)


def has_ap3(a: IntSet) -> bool:
    """True when some x + z = 2y with x != z inside the set."""
    elems = a.elements
    present = set(elems)
    for i, x in enumerate(elems):
        for z in elems[i + 1 :]:
            if (x + z) % 2 == 0 and (x + z) // 2 in present:
                return True
    return False


def random_dense(n: int, alpha: Fraction, seed: int) -> IntSet:
    """Bernoulli(alpha) subset of {1,...,n}, deterministic in the seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    alpha = Fraction(alpha)
    rng = SplitMix64(seed)
    return zset(x for x in range(1, n + 1) if rng.bernoulli(alpha))


def interval(n: int) -> IntSet:
    """{1, ..., n}."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return zset(range(1, n + 1))


def ap(length: int, step: int, start: int = 1) -> IntSet:
    """Arithmetic progression of the given length and step."""
    if length < 0 or step < 1:
        raise ValueError("need length >= 0 and step >= 1")
    last = start + (length - 1) * step if length else start
    if last > 2**62:
        raise OverflowError("progression leaves the 64-bit budget")
    return zset(start + i * step for i in range(length))


def from_spec(spec: str) -> IntSet:
    """Parse a generator spec string, e.g. 'interval:20' or 'random:50,1/2,7'."""
    name, _, arg_text = spec.partition(":")
    args = [s.strip() for s in arg_text.split(",")] if arg_text else []
    try:
        if name in ("powers2", "powers-of-two"):
            return powers_of_two(int(args[0]))
        if name == "behrend":
            return behrend(int(args[0]), int(args[1]))
        if name == "random":
            return random_dense(int(args[0]), Fraction(args[1]), int(args[2]))
        if name == "interval":
            return interval(int(args[0]))
        if name == "ap":
            start = int(args[2]) if len(args) > 2 else 1
            return ap(int(args[0]), int(args[1]), start)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad generator spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown generator family {name!r}")
