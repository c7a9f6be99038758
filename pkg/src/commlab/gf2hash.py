"""Arithmetic in GF(2^w), polynomial hash families and biased bit vectors.

Field elements are plain ints in [0, 2^w).  Bit i of the int is the
coefficient of x^i.

All randomness in the package comes from splitmix64.  Output i (counting
from 0) of the stream seeded with s is

    z = s + (i + 1) * 0x9E3779B97F4A7C15            (mod 2^64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9        (mod 2^64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB        (mod 2^64)
    out = z ^ (z >> 31)

so word i can be computed directly, and numpy can produce many at once.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import itertools

import numpy as np

from .errors import InputError, ResourceError

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64_word(seed, i):
    """Word i of the stream seeded with `seed` (pure-int reference)."""
    z = (seed + (i + 1) * GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64_words(seed, start, count):
    """Words start .. start+count-1 as a uint64 array."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + idx * np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Sequential reader over the splitmix64 stream."""

    def __init__(self, seed):
        self.seed = seed & MASK64
        self.index = 0

    def next_u64(self):
        out = splitmix64_word(self.seed, self.index)
        self.index += 1
        return out

    def take(self, count):
        out = splitmix64_words(self.seed, self.index, count)
        self.index += count
        return out

    def randbelow(self, m):
        """Uniform int in [0, m) by rejection, so there is no modulo bias."""
        if m <= 0:
            raise InputError("randbelow needs m >= 1")
        limit = ((1 << 64) // m) * m
        while True:
            u = self.next_u64()
            if u < limit:
                return u % m

    def uniform(self):
        """Float in [0, 1) built from the top 53 bits of one word."""
        return (self.next_u64() >> 11) / float(1 << 53)


# ---------------------------------------------------------------- fields

# Low-weight irreducible polynomials; each one is re-checked on first use.
_MODULI = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0x11B,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


def poly_mod(a, m):
    """Remainder of a modulo m, both read as GF(2)[x] bit patterns."""
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def is_irreducible(m):
    """Trial division by every polynomial of degree 1 .. deg(m)//2.

    A reducible polynomial always has a factor of at most half its degree,
    so this covers all lower-degree divisors.
    """
    deg = m.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            if poly_mod(m, q) == 0:
                return False
    return True


@lru_cache(maxsize=None)
def _checked(w, modulus):
    if not is_irreducible(modulus):
        raise InputError(f"modulus {modulus:#x} is reducible")
    return True


@dataclass(frozen=True)
class FieldSpec:
    w: int
    modulus: int

    def __post_init__(self):
        if not 2 <= self.w <= 16:
            raise InputError("field width must be in 2..16")
        if self.modulus >> self.w != 1:
            raise InputError("modulus must have degree exactly w")
        _checked(self.w, self.modulus)

    @property
    def size(self):
        return 1 << self.w

    @classmethod
    def of_width(cls, w):
        if w not in _MODULI:
            raise InputError("field width must be in 2..16")
        return cls(w, _MODULI[w])

    @classmethod
    def for_universe(cls, n):
        """Smallest field (w >= 2) with room for n elements."""
        w = max(2, (n - 1).bit_length())
        return cls.of_width(w)


def gf_mul(a, b, spec):
    """Carry-less product of a and b reduced by the field modulus."""
    mask = spec.size - 1
    a &= mask
    b &= mask
    top = 1 << spec.w
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= spec.modulus
    return out


@lru_cache(maxsize=None)
def mul_table(spec):
    """Full multiplication table as an int64 array (only for w <= 10)."""
    if spec.w > 10:
        raise ResourceError("multiplication table limited to w <= 10")
    q = spec.size
    t = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(a, q):
            t[a, b] = t[b, a] = gf_mul(a, b, spec)
    return t


# ---------------------------------------------------------------- hashing

def _hexw(w):
    return (w + 3) // 4


@dataclass(frozen=True)
class KWisePoly:
    """Polynomial c0 + c1 x + ... + c_{k-1} x^{k-1} over the field."""
    spec: FieldSpec
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if self.k not in (1, 2, 3, 4):
            raise InputError("independence order must be 1..4")
        if any(c < 0 or c >= self.spec.size for c in self.coeffs):
            raise InputError("coefficient outside the field")

    @property
    def k(self):
        return len(self.coeffs)

    @classmethod
    def random(cls, spec, k, rng):
        mask = spec.size - 1
        return cls(spec, tuple(rng.next_u64() & mask for _ in range(k)))

    def __call__(self, x):
        if not 0 <= x < self.spec.size:
            raise InputError(f"point {x} outside GF(2^{self.spec.w})")
        acc = 0
        for c in reversed(self.coeffs):
            acc = gf_mul(acc, x, self.spec) ^ c
        return acc

    def values(self):
        """Value at every field element, as an int64 array."""
        return _family_values(self.spec, self.coeffs)

    def to_line(self):
        h = _hexw(self.spec.w)
        cs = ",".join(f"{c:0{h}x}" for c in self.coeffs)
        return f"w={self.spec.w} k={self.k} coeffs={cs}"

    @classmethod
    def from_line(cls, line):
        try:
            parts = dict(tok.split("=", 1) for tok in line.split())
            w = int(parts["w"])
            k = int(parts["k"])
            coeffs = tuple(int(c, 16) for c in parts["coeffs"].split(","))
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad hash descriptor: {line!r}") from exc
        if len(coeffs) != k:
            raise InputError("descriptor k does not match coefficient count")
        return cls(FieldSpec.of_width(w), coeffs)


def _family_values(spec, coeffs):
    xs = np.arange(spec.size, dtype=np.int64)
    if spec.w <= 10:
        t = mul_table(spec)
        acc = np.zeros(spec.size, dtype=np.int64)
        for c in reversed(coeffs):
            acc = t[acc, xs] ^ c
        return acc
    poly = KWisePoly(spec, coeffs)
    return np.array([poly(int(x)) for x in xs], dtype=np.int64)


class SignHash:
    """x -> +1 when the low bit of poly(x) is 0, else -1.

    The sign of every field element is computed once and cached, since
    sketches evaluate the same few points over and over.
    """

    def __init__(self, poly):
        self.poly = poly
        self._table = None

    @property
    def spec(self):
        return self.poly.spec

    def table(self):
        if self._table is None:
            vals = self.poly.values()
            self._table = (1 - 2 * (vals & 1)).astype(np.int64)
        return self._table

    def __call__(self, x):
        if not 0 <= x < self.poly.spec.size:
            raise InputError(f"point {x} outside GF(2^{self.poly.spec.w})")
        return int(self.table()[x])

    def __eq__(self, other):
        return isinstance(other, SignHash) and self.poly == other.poly

    def __hash__(self):
        return hash(self.poly)

    def __repr__(self):
        return f"SignHash({self.poly.to_line()!r})"


def sign_eval(h, x):
    return h(x)


def enumerate_family(spec, k):
    """Every coefficient tuple of the degree-(k-1) family, in lexicographic order."""
    return itertools.product(range(spec.size), repeat=k)


def family_value_tuples(spec, k, points):
    """Array of shape (q^k, len(points)) with each polynomial's values."""
    q = spec.size
    if k * spec.w > 24:
        raise ResourceError("family enumeration exceeds 2^24 polynomials")
    t = mul_table(spec)
    grids = np.indices((q,) * k).reshape(k, -1)  # grids[j] = coefficient j
    out = np.zeros((grids.shape[1], len(points)), dtype=np.int64)
    for col, x in enumerate(points):
        acc = np.zeros(grids.shape[1], dtype=np.int64)
        for j in reversed(range(k)):
            acc = t[acc, x] ^ grids[j]
        out[:, col] = acc
    return out


def verify_kwise(spec, k, points):
    """True iff the family's values at `points` are exactly uniform.

    More than k points are allowed (up to 4); the answer is then False,
    which is how a low-order family fails a higher-order test.
    """
    points = list(points)
    if len(points) > 4 or not 1 <= k <= 4:
        raise InputError("need |points| <= 4 and 1 <= k <= 4")
    if len(set(points)) != len(points):
        raise InputError("points must be distinct")
    if any(not 0 <= p < spec.size for p in points):
        raise InputError("point outside the field")
    if not points:
        return True
    vals = family_value_tuples(spec, k, points)
    q = spec.size
    code = np.zeros(vals.shape[0], dtype=np.int64)
    for col in range(vals.shape[1]):
        code = code * q + vals[:, col]
    counts = np.bincount(code, minlength=q ** len(points))
    return bool(np.all(counts == counts[0]))


# ---------------------------------------------------------------- biased bits

_TWO32 = 1 << 32


@dataclass(frozen=True)
class BiasedBits:
    """Recipe for a length-d vector with iid Bernoulli(p) coordinates.

    Coordinate c uses words 2c and 2c+1 of the seed's stream.  The first
    decides whether the coordinate is relevant (probability min(1, 2p)),
    the second is a fair-ish coin with bias p / min(1, 2p).  Only the top 32
    bits of each word are compared, so probabilities are exact when they
    are multiples of 2^-32.
    """
    d: int
    numer: int
    denom: int
    seed: int

    def __post_init__(self):
        if self.d < 0:
            raise InputError("dimension must be nonnegative")
        if self.denom <= 0 or not 0 < self.numer <= self.denom:
            raise InputError("need 0 < p <= 1")

    @property
    def p(self):
        return Fraction(self.numer, self.denom)

    def to_line(self):
        return f"d={self.d} p={self.numer}/{self.denom} seed={self.seed}"

    @classmethod
    def from_line(cls, line):
        try:
            parts = dict(tok.split("=", 1) for tok in line.split())
            num, den = parts["p"].split("/")
            return cls(int(parts["d"]), int(num), int(den), int(parts["seed"]))
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad biased spec: {line!r}") from exc


def biased_thresholds(p):
    p = Fraction(p)
    stage1 = min(Fraction(1), 2 * p)
    stage2 = p / stage1
    return (stage1.numerator * _TWO32) // stage1.denominator, \
        (stage2.numerator * _TWO32) // stage2.denominator


def biased_from_words(words, p):
    """Turn 2*count words into count biased bits (uint8)."""
    t1, t2 = biased_thresholds(p)
    hi = words >> np.uint64(32)
    rel = hi[0::2] < np.uint64(t1) if t1 < _TWO32 else np.ones(len(hi) // 2, bool)
    coin = hi[1::2] < np.uint64(t2) if t2 < _TWO32 else np.ones(len(hi) // 2, bool)
    return (rel & coin).astype(np.uint8)


def biased_vector(spec):
    words = splitmix64_words(spec.seed, 0, 2 * spec.d)
    return biased_from_words(words, spec.p)


def biased_matrix(rows, d, p, seed, offset=0):
    """rows x d matrix read row-major from the stream, starting at coordinate `offset`."""
    words = splitmix64_words(seed, 2 * offset, 2 * rows * d)
    return biased_from_words(words, p).reshape(rows, d)
