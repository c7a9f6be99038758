"""Property testers on the hypercube: BLR linearity and edge monotonicity.

A point of {0,1}^n is an int mask whose bit i-1 is x_i, and a function is
the table of its 2^n values in mask order.  Testers are generators: they
yield query masks, are sent back the function values, and return True to
accept.  `run_tester` drives one against a table; `tester_to_protocol`
drives two copies in lock step for the UDISJ simulation.
"""
from dataclasses import dataclass
from fractions import Fraction
import itertools
import math

import numpy as np

from .errors import InputError, ResourceError
from .protocols import ProtocolOutcome, Tape, Transcript

BLR_CONSTANT = 12
TRUNCATE_C = 3


def popcount(v):
    return bin(v).count("1")


@dataclass
class RangedFn:
    n: int
    table: tuple
    r: int = 2

    def __post_init__(self):
        self.table = tuple(int(v) for v in self.table)
        if self.n < 0 or len(self.table) != 1 << self.n:
            raise InputError(f"table must have 2^{self.n} entries")
        if self.r < 1 or any(not 0 <= v < self.r for v in self.table):
            raise InputError(f"values must lie in 0..{self.r - 1}")

    def __call__(self, x):
        return self.table[x]

    def to_text(self):
        return f"{self.n} {self.r}\n" + " ".join(map(str, self.table)) + "\n"

    @classmethod
    def from_text(cls, text):
        toks = text.split()
        try:
            vals = [int(t) for t in toks]
        except ValueError as exc:
            raise InputError("function files hold integers only") from exc
        if len(vals) < 2:
            raise InputError("missing 'n r' header")
        n, r = vals[0], vals[1]
        if r == 2:
            return BoolFn(n, vals[2:])
        return cls(n, vals[2:], r)


class BoolFn(RangedFn):
    def __init__(self, n, table):
        super().__init__(n, table, 2)

    @classmethod
    def from_function(cls, n, fn):
        return cls(n, [int(fn(x)) for x in range(1 << n)])


def parity_fn(n, a):
    """x -> <a, x> mod 2."""
    return BoolFn(n, [popcount(a & x) & 1 for x in range(1 << n)])


def all_boolean(n):
    for code in range(1 << (1 << n)):
        yield BoolFn(n, [(code >> x) & 1 for x in range(1 << n)])


# ---------------------------------------------------------------- running testers

def run_tester(gen, f):
    """Drive a tester generator against f.  Returns (accept, queries)."""
    queries = 0
    try:
        x = next(gen)
        while True:
            queries += 1
            x = gen.send(f(x))
    except StopIteration as stop:
        return bool(stop.value), queries


def blr_trials(eps):
    eps = Fraction(eps)
    if eps <= 0:
        raise InputError("eps must be positive")
    return math.ceil(BLR_CONSTANT / eps)


def blr_tester(n, t, tape):
    """t rounds of: uniform x, y; reject if f(x + y) != f(x) + f(y) over F2."""
    for _ in range(t):
        x = tape.read_int(n)
        y = tape.read_int(n)
        a = yield x
        b = yield y
        c = yield x ^ y
        if c != a ^ b:
            return False
    return True


def blr_test(f, eps, tape):
    t = blr_trials(eps)
    accept, _ = run_tester(blr_tester(f.n, t, tape), f)
    return accept, t


def blr_violations(f):
    """Number of (x, y) pairs, out of 4^n, with f(x ^ y) != f(x) ^ f(y)."""
    T = np.array(f.table)
    idx = np.arange(1 << f.n)
    return int(np.count_nonzero(T[idx[:, None] ^ idx[None, :]] != (T[:, None] ^ T[None, :])))


def blr_reject_probability(f):
    return Fraction(blr_violations(f), 1 << (2 * f.n))


def distance_to_linear(f):
    if f.n > 5:
        raise ResourceError("distance_to_linear is limited to n <= 5")
    return min(sum(a != b for a, b in zip(f.table, parity_fn(f.n, a).table))
               for a in range(1 << f.n))


# ---------------------------------------------------------------- monotonicity

def edge_tester(n, t, tape):
    """t rounds of: uniform slice i and x_-i; reject if f(0, x_-i) > f(1, x_-i)."""
    for _ in range(t):
        i = tape.randbelow(n)
        x = tape.read_int(n)
        lo = x & ~(1 << i)
        a = yield lo
        b = yield lo | 1 << i
        if a > b:
            return False
    return True


def edge_test(f, t, tape):
    accept, _ = run_tester(edge_tester(f.n, t, tape), f)
    return accept


def violation_slices(f):
    """(|A_1|, ..., |A_n|) and the single-trial rejection probability of the edge test."""
    counts = []
    for i in range(f.n):
        bit = 1 << i
        counts.append(sum(1 for x in range(1 << f.n)
                          if not x & bit and f.table[x] > f.table[x | bit]))
    edges = f.n << (f.n - 1) if f.n else 1
    return tuple(counts), Fraction(sum(counts), edges)


def is_monotone(f):
    return not any(violation_slices(f)[0])


def _swap_pass(table, n, violated):
    """One sweep over slices 1..n swapping endpoint values of violated edges."""
    changes = 0
    for i in range(n):
        bit = 1 << i
        for x in range(1 << n):
            if not x & bit and violated(table[x], table[x | bit]):
                table[x], table[x | bit] = table[x | bit], table[x]
                changes += 2
    return changes


def monotonize(f):
    """Returns (monotone g, number of entries changed along the way).

    Boolean: a single swap pass.  Larger ranges: one pass per bit of the
    value, most significant first.  The pass for bit b only swaps edges
    whose values agree above bit b and are out of order at bit b.
    """
    table = list(f.table)
    if f.r <= 2:
        changes = _swap_pass(table, f.n, lambda a, b: a > b)
    else:
        k = (f.r - 1).bit_length()
        changes = 0
        for b in reversed(range(k)):
            changes += _swap_pass(
                table, f.n,
                lambda u, v, b=b: u >> (b + 1) == v >> (b + 1) and (u >> b & 1) > (v >> b & 1))
    g = RangedFn(f.n, table, f.r) if f.r > 2 else BoolFn(f.n, table)
    assert is_monotone(g), "monotonize produced a non-monotone function"
    return g, changes


def hamming(f, g):
    return sum(a != b for a, b in zip(f.table, g.table))


# ---------------------------------------------------------------- distance oracles

_MONO = {0: [(0,), (1,)]}


def monotone_tables(n):
    """Every monotone Boolean table on n variables (Dedekind many)."""
    if n > 5:
        raise ResourceError("monotone enumeration is limited to n <= 5")
    if n not in _MONO:
        lower = monotone_tables(n - 1)
        # f(x, 0) = g and f(x, 1) = h with g <= h pointwise
        _MONO[n] = [g + h for g in lower for h in lower
                    if all(a <= b for a, b in zip(g, h))]
    return _MONO[n]


def _violation_graph(f):
    """Adjacency masks: x ~ y when x is below y but f(x) > f(y)."""
    N = 1 << f.n
    adj = [0] * N
    for x in range(N):
        for y in range(N):
            if x != y and x & y == x and f.table[x] > f.table[y]:
                adj[x] |= 1 << y
                adj[y] |= 1 << x
    return adj


def _max_independent(adj, cand):
    """Size of a maximum independent set inside the vertex mask cand."""
    if not cand:
        return 0
    # vertices with no neighbour in cand are always taken
    free = 0
    m = cand
    while m:
        v = (m & -m).bit_length() - 1
        if not adj[v] & cand:
            free |= 1 << v
        m &= m - 1
    if free:
        return popcount(free) + _max_independent(adj, cand & ~free)
    m, best_v, best_d = cand, -1, -1
    while m:
        v = (m & -m).bit_length() - 1
        d = popcount(adj[v] & cand)
        if d > best_d:
            best_v, best_d = v, d
        m &= m - 1
    v = best_v
    take = 1 + _max_independent(adj, cand & ~adj[v] & ~(1 << v))
    skip = _max_independent(adj, cand & ~(1 << v))
    return max(take, skip)


def distance_by_vertex_cover(f):
    """Minimum vertex cover of the violation graph.

    The entries left unchanged must be pairwise consistent, so they form
    an independent set; any independent set can keep its values because
    a partial monotone labelling with a totally ordered range always
    extends.
    """
    if f.n > 5:
        raise ResourceError("vertex-cover distance is limited to n <= 5")
    adj = _violation_graph(f)
    N = 1 << f.n
    return N - _max_independent(adj, (1 << N) - 1)


def distance_by_enumeration(f):
    """Scan every monotone function with f's range."""
    if f.r <= 2:
        if f.n > 5:
            raise ResourceError("Boolean enumeration is limited to n <= 5")
        T = np.array(monotone_tables(f.n), dtype=np.int8)
        return int(np.min(np.count_nonzero(T != np.array(f.table, dtype=np.int8), axis=1)))
    if f.n > 3 or f.r > 4:
        raise ResourceError("ranged enumeration is limited to n <= 3 and r <= 4")
    N = 1 << f.n
    best = [N]
    vals = [0] * N

    # masks in increasing order form a linear extension of the cube
    def dfs(x, dist):
        if dist >= best[0]:
            return
        if x == N:
            best[0] = dist
            return
        floor = max((vals[x & ~(1 << i)] for i in range(f.n) if x >> i & 1), default=0)
        for v in range(floor, f.r):
            vals[x] = v
            dfs(x + 1, dist + (v != f.table[x]))

    dfs(0, 0)
    return best[0]


def distance_to_monotone(f):
    return distance_by_vertex_cover(f)


# ---------------------------------------------------------------- BBM gadget

@dataclass(frozen=True)
class GadgetAB:
    n: int
    A: frozenset
    B: frozenset

    def __post_init__(self):
        A, B = frozenset(self.A), frozenset(self.B)
        universe = set(range(1, self.n + 1))
        if not A <= universe or not B <= universe:
            raise InputError("A and B must be subsets of 1..n")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def a_mask(self):
        return sum(1 << (i - 1) for i in self.A)

    @property
    def b_mask(self):
        return sum(1 << (i - 1) for i in self.B)


def truncation_bounds(n, c=TRUNCATE_C):
    """Integer clamp window [n - c sqrt(n), n + c sqrt(n)], shrunk to integers."""
    w = math.isqrt(c * c * n)
    return n - w, n + w


def gadget_value(S, a_mask, b_mask):
    return 2 * popcount(S) + (-1) ** popcount(S & a_mask) + (-1) ** popcount(S & b_mask)


def _popcounts(S, n):
    pc = np.zeros(len(S), dtype=np.int64)
    for i in range(n):
        pc += (S >> i) & 1
    return pc


def _signs(S, n):
    return 1 - 2 * (_popcounts(S, n) & 1)


def gadget_h(g, truncate=None):
    """Table of 2|S| + (-1)^|S & A| + (-1)^|S & B|, optionally clamped.

    Values lie in 0..2n+2, so the range size is 2n + 3.
    """
    if g.n > 16:
        raise ResourceError("gadget tables are limited to n <= 16")
    S = np.arange(1 << g.n)
    pc = _popcounts(S, g.n)
    vals = 2 * pc + _signs(S & g.a_mask, g.n) + _signs(S & g.b_mask, g.n)
    if truncate is not None:
        lo, hi = truncation_bounds(g.n, truncate)
        vals = np.clip(vals, lo, hi)
    return RangedFn(g.n, vals.tolist(), 2 * g.n + 3)


def tester_to_protocol(tester, A, B, tape, n=None):
    """Alice (holding A) and Bob (holding B) run the same tester on h_AB.

    `tester(n, tape)` must build a fresh tester generator.  Each party
    runs its own copy off a private replay of the shared tape.  For a query
    S, Alice sends the parity of |S & A| and Bob the parity of |S & B|;
    then both know h_AB(S).  Output 1 ("disjoint") iff the tester accepts.
    """
    if n is None:
        n = max(max(A, default=0), max(B, default=0))
    g = GadgetAB(n, A, B)
    am, bm = g.a_mask, g.b_mask
    tr = Transcript()
    copies = [tester(n, Tape(tape.seed)), tester(n, Tape(tape.seed))]
    queries = 0
    results = [None, None]
    pending = [next(c) for c in copies]
    while True:
        assert pending[0] == pending[1], "tester copies diverged"
        S = pending[0]
        if S is None:
            break
        pa = tr.send("A", str(popcount(S & am) & 1))
        pb = tr.send("B", str(popcount(S & bm) & 1))
        value = 2 * popcount(S) + (1 - 2 * int(pa)) + (1 - 2 * int(pb))
        queries += 1
        for k, c in enumerate(copies):
            try:
                pending[k] = c.send(value)
            except StopIteration as stop:
                pending[k] = None
                results[k] = bool(stop.value)
    assert results[0] == results[1], "tester copies disagree"
    assert tr.total == 2 * queries
    return ProtocolOutcome(int(results[0]), tr)


def all_gadget_pairs(n, inter):
    """Every (A, B) over 1..n with |A & B| == inter."""
    for a in range(1 << n):
        for b in range(1 << n):
            if popcount(a & b) == inter:
                yield ({i + 1 for i in range(n) if a >> i & 1},
                       {i + 1 for i in range(n) if b >> i & 1})


def all_ranged(n, r):
    for vals in itertools.product(range(r), repeat=1 << n):
        yield RangedFn(n, vals, r)
