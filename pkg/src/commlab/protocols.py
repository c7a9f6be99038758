"""Two-party protocols with exact bit accounting.

Shared randomness comes from a `Tape`: bit c of the tape is bit (c mod 64)
of splitmix64 word c // 64 of the tape's seed.  Both parties hold their
own Tape with the same seed and read it in the same order, so they stay
aligned without talking.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import itertools
import json
import math

import numpy as np

from .errors import InputError, ProtocolError, SearchFailure
from .gf2hash import SplitMix64, biased_from_words, splitmix64_word, splitmix64_words
from . import sketches

SPEAKERS = ("A", "B", "P")


def as_bits(v, n=None):
    """Accept a 0/1 string, a sequence, or an int (with n) and return a uint8 array."""
    if isinstance(v, str):
        arr = np.array([int(ch) for ch in v], dtype=np.uint8)
    elif isinstance(v, (int, np.integer)) and n is not None:
        arr = np.array([(int(v) >> i) & 1 for i in range(n)], dtype=np.uint8)
    else:
        arr = np.asarray(v, dtype=np.uint8)
    if arr.ndim != 1 or np.any(arr > 1):
        raise InputError("bit vector must be a flat 0/1 sequence")
    return arr


def bitstr(bits):
    return "".join("1" if b else "0" for b in bits)


# ---------------------------------------------------------------- tapes

class Tape:
    def __init__(self, seed):
        self.seed = int(seed)
        self.cursor = 0
        self._word, self._bits = None, None

    def read_bits(self, k):
        if k == 0:
            return np.zeros(0, dtype=np.uint8)
        first = self.cursor // 64
        last = (self.cursor + k - 1) // 64
        if first == last:
            # short reads come from one word; keep its bits around
            if self._word != first:
                w = splitmix64_word(self.seed, first)
                self._word, self._bits = first, [(w >> j) & 1 for j in range(64)]
            off = self.cursor - 64 * first
            self.cursor += k
            return np.array(self._bits[off:off + k], dtype=np.uint8)
        words = splitmix64_words(self.seed, first, last - first + 1)
        bits = np.unpackbits(words.view(np.uint8), bitorder="little")
        off = self.cursor - 64 * first
        self.cursor += k
        return bits[off:off + k].copy()

    def read_int(self, k):
        """The next k bits as an int, first bit least significant."""
        return sum(int(b) << j for j, b in enumerate(self.read_bits(k)))

    def read_words(self, k):
        """k whole words, starting at the next word boundary."""
        first = -(-self.cursor // 64)
        self.cursor = 64 * (first + k)
        return splitmix64_words(self.seed, first, k)

    def read_word(self):
        first = -(-self.cursor // 64)
        self.cursor = 64 * (first + 1)
        return splitmix64_word(self.seed, first)

    def randbelow(self, m):
        if m <= 0:
            raise InputError("randbelow needs m >= 1")
        limit = ((1 << 64) // m) * m
        while True:
            u = self.read_word()
            if u < limit:
                return u % m

    def biased_rows(self, rows, d, p):
        """rows x d matrix of Bernoulli(p) bits, two words per entry."""
        return biased_from_words(self.read_words(2 * rows * d), p).reshape(rows, d)


class FixedTape(Tape):
    """Replays a given bit string; used to enumerate every tape exhaustively."""

    def __init__(self, bits):
        super().__init__(0)
        self.bits = as_bits(bits)

    def read_bits(self, k):
        if self.cursor + k > len(self.bits):
            raise ProtocolError("fixed tape exhausted")
        out = self.bits[self.cursor:self.cursor + k].copy()
        self.cursor += k
        return out

    def read_words(self, k):
        raise ProtocolError("fixed tapes only provide bits")

    def read_word(self):
        raise ProtocolError("fixed tapes only provide bits")


# ---------------------------------------------------------------- transcripts

class Transcript:
    def __init__(self, events=()):
        self.events = []
        for who, bits in events:
            self.send(who, bits)

    def send(self, who, bits):
        if who not in SPEAKERS:
            raise InputError(f"unknown speaker {who!r}")
        if not isinstance(bits, str):
            bits = bitstr(bits)
        if bits.strip("01"):
            raise InputError("message must be a 0/1 string")
        self.events.append((who, bits))
        return bits

    @property
    def total(self):
        return sum(len(b) for _, b in self.events)

    def bits_by(self, who):
        return sum(len(b) for w, b in self.events if w == who)

    def to_json(self):
        return json.dumps({"events": [{"who": w, "bits": b} for w, b in self.events],
                           "total": self.total}, separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        t = cls((e["who"], e["bits"]) for e in obj["events"])
        if t.total != obj["total"]:
            raise ProtocolError("transcript total does not match its events")
        return t

    def __eq__(self, other):
        return isinstance(other, Transcript) and self.events == other.events


@dataclass
class ProtocolOutcome:
    output: int
    transcript: Transcript = field(default_factory=Transcript)

    @property
    def alice_bits(self):
        return self.transcript.bits_by("A")

    @property
    def bob_bits(self):
        return self.transcript.bits_by("B")

    @property
    def prover_bits(self):
        return self.transcript.bits_by("P")


# ---------------------------------------------------------------- equality

def run_equality(x, y, tape, reps=1):
    """Public-coin equality: per repetition Alice sends <x,r1> and <x,r2> mod 2."""
    x, y = as_bits(x), as_bits(y)
    if len(x) != len(y):
        raise InputError("equality inputs must have the same length")
    if reps < 1:
        raise InputError("need at least one repetition")
    n = len(x)
    tr = Transcript()
    accept = 1
    for _ in range(reps):
        r1, r2 = tape.read_bits(n), tape.read_bits(n)
        a = (int(x @ r1) & 1, int(x @ r2) & 1)
        b = (int(y @ r1) & 1, int(y @ r2) & 1)
        tr.send("A", a)
        if a != b:
            accept = 0
    return ProtocolOutcome(accept, tr)


def equality_error_exact(x, y, reps=1):
    """Exact acceptance probability of an unequal pair, enumerating every tape."""
    n = len(as_bits(x))
    width = 2 * n * reps
    wrong = 0
    for code in range(1 << width):
        bits = [(code >> i) & 1 for i in range(width)]
        out = run_equality(x, y, FixedTape(bits), reps).output
        if out != int(np.array_equal(as_bits(x), as_bits(y))):
            wrong += 1
    return Fraction(wrong, 1 << width)


# ---------------------------------------------------------------- clique vs independent set

class CisInstance:
    """Graph on vertices 0..n-1 with Alice's clique and Bob's independent set."""

    def __init__(self, n, edges, clique, indep):
        self.n = n
        self.adj = [0] * n
        for u, v in edges:
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise InputError(f"bad edge ({u}, {v})")
            self.adj[u] |= 1 << v
            self.adj[v] |= 1 << u
        self.clique = _mask(clique, n)
        self.indep = _mask(indep, n)
        for u in _members(self.clique):
            others = self.clique & ~(1 << u)
            if self.adj[u] & others != others:
                raise InputError("Alice's set is not a clique")
        for u in _members(self.indep):
            if self.adj[u] & self.indep:
                raise InputError("Bob's set is not independent")

    @property
    def disjoint(self):
        return int(self.clique & self.indep == 0)


def _mask(vs, n):
    m = 0
    for v in vs:
        if not 0 <= v < n:
            raise InputError(f"vertex {v} out of range")
        m |= 1 << v
    return m


def _members(mask):
    v = 0
    while mask:
        if mask & 1:
            yield v
        mask >>= 1
        v += 1


def name_width(n):
    return max(0, (n - 1).bit_length())


def cis_core(n, adj, clique, indep):
    """The protocol on bitmask inputs; returns (output, events).

    Each round works on the surviving vertex set V.  Alice names a clique
    vertex of degree below |V|/2 in V, or sends a 0 flag.  A named vertex
    is answered with one bit saying whether it is in the other party's set.
    If it is not, the survivors shrink to its neighbours.  Otherwise Bob
    names an independent vertex of degree at least |V|/2, and the survivors
    shrink to its non-neighbours.  Two 0 flags in a row mean the sets are
    disjoint.  Every round at least halves V.
    """
    width = name_width(n)
    events = []
    alive = (1 << n) - 1
    while True:
        size = alive.bit_count()
        c = clique & alive
        v = -1
        while c:
            low = c & -c
            u = low.bit_length() - 1
            if 2 * (adj[u] & alive).bit_count() < size:
                v = u
                break
            c ^= low
        if v >= 0:
            events.append(("A", "1" + format(v, f"0{width}b") if width else "1"))
            if indep >> v & 1:
                events.append(("B", "1"))
                return 0, events
            events.append(("B", "0"))
            alive &= adj[v]
            continue
        events.append(("A", "0"))
        i = indep & alive
        v = -1
        while i:
            low = i & -i
            u = low.bit_length() - 1
            if 2 * (adj[u] & alive).bit_count() >= size:
                v = u
                break
            i ^= low
        if v < 0:
            events.append(("B", "0"))
            return 1, events
        events.append(("B", "1" + format(v, f"0{width}b") if width else "1"))
        if clique >> v & 1:
            events.append(("A", "1"))
            return 0, events
        events.append(("A", "0"))
        alive &= ~adj[v] & ~(1 << v)


def run_cis(inst):
    out, events = cis_core(inst.n, inst.adj, inst.clique, inst.indep)
    return ProtocolOutcome(out, Transcript(events))


def cis_bit_bound(n):
    return 4 * (math.ceil(math.log2(n)) + 1) ** 2 if n > 1 else 4


# ---------------------------------------------------------------- gap hamming (biased inner products)

def flip_probability(L, delta):
    """Pr[<r,x> != <r,y>] for r with Bernoulli(1/(2L)) coordinates and d_H(x,y) = delta."""
    return Fraction(1, 2) * (1 - (1 - Fraction(1, L)) ** delta)


def disagreement_exact(x, y, p):
    """The same probability by summing the weights of all r in {0,1}^d."""
    x, y = as_bits(x), as_bits(y)
    p = Fraction(p)
    total = Fraction(0)
    for r in itertools.product((0, 1), repeat=len(x)):
        r = np.array(r, dtype=np.uint8)
        if (int(x @ r) ^ int(y @ r)) & 1:
            k = int(r.sum())
            total += p ** k * (1 - p) ** (len(x) - k)
    return total


def gap_h(eps):
    """Lower bound on the flip-probability gap between distance L and (1+eps)L."""
    return 0.5 * math.exp(-2) * (1 - math.exp(-float(eps)))


def hoeffding_length(eps, delta):
    """Hash length s making both error sides at most delta/2 by Hoeffding."""
    return math.ceil(2 * math.log(2 / float(delta)) / gap_h(eps) ** 2)


@dataclass(frozen=True)
class GapParams:
    """Sampling bias, hash length and acceptance threshold for scale L.

    The bias is 1/(2L) except at L = 1, where it would be 1/2 and make
    every nonzero distance look the same; there 1/4 is used instead.
    """
    L: int
    s: int
    bias: Fraction
    t: Fraction
    h: float

    @classmethod
    def make(cls, L, eps, delta, s=None):
        if L < 1:
            raise InputError("scale L must be at least 1")
        if not 0 < Fraction(eps) <= 1:
            raise InputError("eps must lie in (0, 1]")
        if s is None:
            s = hoeffding_length(eps, delta)
        bias = Fraction(1, 2 * max(L, 2))
        t = Fraction(1, 2) * (1 - (1 - 2 * bias) ** L)
        return cls(L, s, bias, t, gap_h(eps))

    @property
    def threshold(self):
        """Largest hash distance still declared near."""
        return math.floor((float(self.t) + self.h / 2) * self.s)


def run_epsgh(x, y, L, eps, delta, tape, s=None):
    """Bob declares d_H(x,y) <= L (output 1) when few of the s hashed bits differ."""
    x, y = as_bits(x), as_bits(y)
    if len(x) != len(y):
        raise InputError("inputs must have the same length")
    if not 1 <= L <= len(x):
        raise InputError("need 1 <= L <= d")
    prm = GapParams.make(L, eps, delta, s)
    R = tape.biased_rows(prm.s, len(x), prm.bias).astype(np.int64)
    hx = (R @ x.astype(np.int64)) & 1
    hy = (R @ y.astype(np.int64)) & 1
    tr = Transcript()
    tr.send("A", hx)
    dist = int(np.count_nonzero(hx != hy))
    return ProtocolOutcome(int(dist <= prm.threshold), tr)


# ---------------------------------------------------------------- streaming adapter

def streaming_to_oneway(factory, x, y, postprocess):
    """Alice streams {i : x_i = 1} and mails the sketch bytes; Bob resumes with y."""
    x, y = as_bits(x), as_bits(y)
    sk = factory()
    sk.extend(int(i) + 1 for i in np.flatnonzero(x))
    state = sk.to_bytes()
    tr = Transcript()
    tr.send("A", np.unpackbits(np.frombuffer(state, dtype=np.uint8), bitorder="little"))
    received = np.packbits(as_bits(tr.events[-1][1]), bitorder="little").tobytes()
    bob = sketches.restore(received)
    if type(bob) is not type(sk):
        raise ProtocolError("Bob restored a different sketch type")
    bob.extend(int(i) + 1 for i in np.flatnonzero(y))
    return ProtocolOutcome(int(postprocess(bob.estimate())), tr)


# ---------------------------------------------------------------- Newman

def all_inputs(n):
    return [tuple(int(b) for b in format(v, f"0{n}b")) for v in range(1 << n)] if n else [()]


def newman_search(protocol, truth, n, t, budget, seed=0, quota=Fraction(3, 5)):
    """Find t tape seeds such that on every input pair at least quota*t runs are right.

    `protocol(x, y, tape)` returns a ProtocolOutcome and `truth(x, y)` the
    correct bit.  Every candidate set is checked on all 4^n input pairs.
    """
    if n > 4:
        raise InputError("exhaustive verification needs n <= 4")
    rng = SplitMix64(seed)
    pairs = [(x, y) for x in all_inputs(n) for y in all_inputs(n)]
    need = quota * t
    for _ in range(budget):
        tapes = [rng.next_u64() for _ in range(t)]
        ok = True
        for x, y in pairs:
            want = truth(x, y)
            right = sum(protocol(x, y, Tape(s)).output == want for s in tapes)
            if right < need:
                ok = False
                break
        if ok:
            return tapes
    raise SearchFailure(f"no good tape set of size {t} within {budget} attempts")
