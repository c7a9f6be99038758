"""Streaming sketches: AMS F2, bottom-k F0, exact F-infinity, Morris, Misra-Gries.

Universe items are 1..n.  Item j is hashed as the field element j - 1,
so the field only has to hold n elements.

Every sketch has a canonical byte encoding (`to_bytes`).  Those bytes are
what Alice ships to Bob in the one-way protocol adapter, so their length is
the communication cost.
"""
from fractions import Fraction
import math
import struct

from .errors import InputError, ProtocolError
from .gf2hash import FieldSpec, KWisePoly, SignHash, SplitMix64


class Stream:
    def __init__(self, n, items):
        self.n = n
        self.items = list(items)
        for j in self.items:
            if not 1 <= j <= n:
                raise InputError(f"item {j} outside universe 1..{n}")

    def __len__(self):
        return len(self.items)

    def frequencies(self):
        f = [0] * (self.n + 1)
        for j in self.items:
            f[j] += 1
        return f[1:]

    def moment(self, k):
        return sum(c ** k for c in self.frequencies() if c)

    def distinct(self):
        return len(set(self.items))

    def max_frequency(self):
        return max(self.frequencies(), default=0)


def median_of_means(values, groups):
    """Median of the means of `groups` consecutive blocks.

    With an even number of groups the lower median is returned.
    """
    values = [Fraction(v) for v in values]
    if not values or groups < 1:
        raise InputError("need at least one value and one group")
    if len(values) % groups:
        raise InputError("value count must be divisible by the group count")
    size = len(values) // groups
    means = sorted(sum(values[i * size:(i + 1) * size]) / size for i in range(groups))
    return means[(groups - 1) // 2]


def groups_for_delta(delta):
    """Group count ceil(24 ln(1/delta)) for median amplification."""
    return math.ceil(24 * math.log(1 / float(delta)))


def copies_for(eps, delta):
    """Copies needed for plain averaging by Chebyshev: 2 / (eps^2 delta)."""
    eps, delta = Fraction(eps), Fraction(delta)
    return math.ceil(Fraction(2) / (eps * eps * delta))


# ---------------------------------------------------------------- encoding

def _u32(*xs):
    return struct.pack("<" + "I" * len(xs), *xs)


def _read(fmt, data, pos):
    size = struct.calcsize(fmt)
    if pos + size > len(data):
        raise ProtocolError("sketch state truncated")
    return struct.unpack_from(fmt, data, pos), pos + size


def _lines(data, pos, count):
    try:
        text = data[pos:].decode("ascii")
    except UnicodeDecodeError as exc:
        raise ProtocolError("hash descriptors are not ascii") from exc
    lines = text.split("\n")
    if len(lines) != count + 1 or lines[-1] != "":
        raise ProtocolError("wrong number of hash descriptor lines")
    try:
        return [KWisePoly.from_line(line) for line in lines[:-1]]
    except InputError as exc:
        raise ProtocolError(str(exc)) from exc


# ---------------------------------------------------------------- F2

class F2Sketch:
    """t independent tug-of-war counters Z_i = sum_j f_j h_i(j).

    The estimate is the median over `groups` blocks of the block mean of
    Z_i^2.  With one group that is the plain average.
    """
    TAG = b"F2SK"

    def __init__(self, n, hashes, groups=1, counters=None):
        if not hashes:
            raise InputError("need at least one hash")
        if len(hashes) % groups:
            raise InputError("copy count must be divisible by the group count")
        self.n = n
        self.hashes = list(hashes)
        self.groups = groups
        self.counters = list(counters) if counters is not None else [0] * len(hashes)
        spec = self.hashes[0].spec
        if spec.size < n:
            raise InputError("hash field smaller than the universe")

    @classmethod
    def create(cls, n, t, groups=1, seed=0):
        spec = FieldSpec.for_universe(n)
        rng = SplitMix64(seed)
        hashes = [SignHash(KWisePoly.random(spec, 4, rng)) for _ in range(t)]
        return cls(n, hashes, groups)

    @property
    def t(self):
        return len(self.hashes)

    def update(self, j):
        if not 1 <= j <= self.n:
            raise InputError(f"item {j} outside universe 1..{self.n}")
        for i, h in enumerate(self.hashes):
            self.counters[i] += int(h.table()[j - 1])
        return self

    def extend(self, items):
        for j in items:
            self.update(j)
        return self

    def basic_estimates(self):
        return [Fraction(z * z) for z in self.counters]

    def estimate(self):
        return median_of_means(self.basic_estimates(), self.groups)

    def to_bytes(self):
        out = [self.TAG, _u32(self.t, self.groups, self.n)]
        out.append(struct.pack(f"<{self.t}q", *self.counters))
        out.append("".join(h.poly.to_line() + "\n" for h in self.hashes).encode("ascii"))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != cls.TAG:
            raise ProtocolError("not an F2 sketch")
        (t, g, n), pos = _read("<III", data, 4)
        counters, pos = _read(f"<{t}q", data, pos)
        polys = _lines(data, pos, t)
        try:
            return cls(n, [SignHash(p) for p in polys], g, counters)
        except InputError as exc:
            raise ProtocolError(str(exc)) from exc

    @staticmethod
    def encoded_size(n, t):
        """Byte length of to_bytes() for t copies over universe 1..n."""
        w = FieldSpec.for_universe(n).w
        line = len(f"w={w} k=4 coeffs=") + 4 * ((w + 3) // 4) + 3 + 1
        return 4 + 12 + 8 * t + t * line


def f2_update(sk, j):
    return sk.update(j)


def f2_estimate(sk):
    return sk.estimate()


# ---------------------------------------------------------------- F0

class F0Sketch:
    """Keeps the k' smallest distinct values of h(x) = a*x + b + 1 (a != 0).

    Hash values lie in 1..|U'| with |U'| the padded field size.  Once some
    value has been pushed out (more than k' distinct items seen), the
    estimate is k' |U'| / (largest kept value).  Until then the sketch
    knows the distinct count exactly and reports it.
    """
    TAG = b"F0SK"

    def __init__(self, n, poly, kprime, bottom=(), saturated=False):
        if kprime < 1:
            raise InputError("k' must be positive")
        if poly.k != 2 or poly.coeffs[1] == 0:
            raise InputError("F0 hash must be degree one with a nonzero slope")
        self.n = n
        self.poly = poly
        self.kprime = kprime
        self.bottom = sorted(set(bottom))
        self.saturated = bool(saturated)
        self._values = poly.values()

    @classmethod
    def create(cls, n, kprime, seed=0):
        spec = FieldSpec.for_universe(n)
        rng = SplitMix64(seed)
        a = 1 + rng.randbelow(spec.size - 1)
        b = rng.next_u64() & (spec.size - 1)
        return cls(n, KWisePoly(spec, (b, a)), kprime)

    @staticmethod
    def kprime_for(eps):
        eps = Fraction(eps)
        return math.ceil(Fraction(12) / (eps * eps))

    @property
    def universe(self):
        return self.poly.spec.size

    def hash(self, j):
        return int(self._values[j - 1]) + 1

    def update(self, j):
        if not 1 <= j <= self.n:
            raise InputError(f"item {j} outside universe 1..{self.n}")
        v = self.hash(j)
        b = self.bottom
        if v in b:
            return self
        if len(b) < self.kprime:
            b.append(v)
            b.sort()
            return self
        self.saturated = True
        if v < b[-1]:
            b[-1] = v
            b.sort()
        return self

    def extend(self, items):
        for j in items:
            self.update(j)
        return self

    def estimate(self):
        if not self.saturated:
            return Fraction(len(self.bottom))
        return Fraction(self.kprime * self.universe, self.bottom[-1])

    def to_bytes(self):
        head = self.TAG + _u32(self.kprime, self.n, len(self.bottom), int(self.saturated))
        body = struct.pack(f"<{len(self.bottom)}I", *self.bottom)
        return head + body + (self.poly.to_line() + "\n").encode("ascii")

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != cls.TAG:
            raise ProtocolError("not an F0 sketch")
        (kp, n, count, sat), pos = _read("<IIII", data, 4)
        bottom, pos = _read(f"<{count}I", data, pos)
        (poly,) = _lines(data, pos, 1)
        try:
            return cls(n, poly, kp, bottom, sat)
        except InputError as exc:
            raise ProtocolError(str(exc)) from exc


def f0_update(sk, j):
    return sk.update(j)


def f0_estimate(sk):
    return sk.estimate()


# ---------------------------------------------------------------- F-infinity

class FInfSketch:
    """Exact frequency table; the estimate is the largest frequency."""
    TAG = b"FISK"

    def __init__(self, n, counts=None):
        self.n = n
        self.counts = list(counts) if counts is not None else [0] * n
        if len(self.counts) != n:
            raise InputError("count table has the wrong length")

    @classmethod
    def create(cls, n, seed=0):
        return cls(n)

    def update(self, j):
        if not 1 <= j <= self.n:
            raise InputError(f"item {j} outside universe 1..{self.n}")
        self.counts[j - 1] += 1
        return self

    def extend(self, items):
        for j in items:
            self.update(j)
        return self

    def estimate(self):
        return Fraction(max(self.counts, default=0))

    def to_bytes(self):
        return self.TAG + _u32(self.n) + struct.pack(f"<{self.n}I", *self.counts)

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != cls.TAG:
            raise ProtocolError("not an F-infinity sketch")
        (n,), pos = _read("<I", data, 4)
        counts, pos = _read(f"<{n}I", data, pos)
        if pos != len(data):
            raise ProtocolError("trailing bytes after sketch state")
        return cls(n, counts)


_KINDS = {cls.TAG: cls for cls in (F2Sketch, F0Sketch, FInfSketch)}


def restore(data):
    """Rebuild any sketch from its canonical bytes."""
    cls = _KINDS.get(bytes(data[:4]))
    if cls is None:
        raise ProtocolError("unknown sketch tag")
    return cls.from_bytes(bytes(data))


# ---------------------------------------------------------------- Morris

class MorrisCounter:
    """Approximate counter: increment c with probability 2^-c.

    Each touch reads one word w; the increment happens iff the top c bits
    of w are all zero.
    """

    def __init__(self, seed=0):
        self.c = 0
        self.rng = SplitMix64(seed)

    def touch(self):
        u = self.rng.next_u64()
        if self.c < 64 and (self.c == 0 or u >> (64 - self.c) == 0):
            self.c += 1
        return self

    def estimate(self):
        return Fraction(2 ** self.c - 1)


def morris_touch(mc):
    return mc.touch()


def morris_estimate(mc):
    return mc.estimate()


# ---------------------------------------------------------------- Misra-Gries

class MisraGries:
    """At most k-1 (element, counter) slots.

    An element with frequency above m/k always keeps a slot, and every slot
    counter undercounts the true frequency by at most m/k.
    """

    def __init__(self, k):
        if k < 2:
            raise InputError("Misra-Gries needs k >= 2")
        self.k = k
        self.slots = {}
        self.m = 0

    def update(self, e):
        self.m += 1
        slots = self.slots
        if e in slots:
            slots[e] += 1
        elif len(slots) < self.k - 1:
            slots[e] = 1
        else:
            for key in list(slots):
                slots[key] -= 1
                if slots[key] == 0:
                    del slots[key]
        return self

    def extend(self, items):
        for e in items:
            self.update(e)
        return self

    def count(self, e):
        return self.slots.get(e, 0)

    def candidates(self):
        return set(self.slots)


def mg_update(mg, e):
    return mg.update(e)


def mg_candidates(mg):
    return mg.candidates()
