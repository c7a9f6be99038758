"""(1+eps)-approximate nearest neighbour in the Hamming cube, plus embedding gadgets.

A DecisionTable for scale L hashes each point p to h_R(p) = R p mod 2,
where R is s x d with Bernoulli(bias) entries.  Bucket `key` holds a
point whose hash is within `threshold` of key.  A query reads a single
bucket, the one at h_R(q).

Buckets can be stored two ways:

* materialized: every key within the threshold radius of every hash is
  written up front.  This is honest about the exponential space cost and
  is only possible for short hashes.
* lazy: a bucket's content is computed the first time it is read and then
  remembered.  The content equals what the materialized table would hold
  (the lowest point id in range), so queries still cost one read.
"""
from fractions import Fraction
import itertools
import math

import numpy as np

from .errors import InputError, ResourceError
from .gf2hash import SplitMix64, biased_matrix, splitmix64_word
from .protocols import GapParams, as_bits

MAX_KEY_BITS = 30
MAX_RADIUS = 8


def decision_length(n, eps, delta):
    """Hash length with error delta/(2n) per point per side (Hoeffding plus a union bound)."""
    h = GapParams.make(1, eps, delta, s=1).h
    return math.ceil(2 * math.log(2 * n / float(delta)) / h ** 2)


def probe_budget(d):
    return math.ceil(math.log2(d)) + 1 if d > 1 else 1


class DecisionTable:
    def __init__(self, points, L, eps, delta, seed, s=None, materialize=False):
        P = np.array([as_bits(p) for p in points], dtype=np.uint8)
        if P.ndim != 2 or len(P) == 0:
            raise InputError("need at least one point")
        self.n, self.d = P.shape
        if not 1 <= L <= self.d:
            raise InputError("need 1 <= L <= d")
        if s is None:
            s = decision_length(self.n, eps, delta)
        self.params = GapParams.make(L, eps, delta, s)
        self.L, self.s, self.seed = L, s, seed
        self.threshold = self.params.threshold
        self.R = biased_matrix(s, self.d, self.params.bias, seed)
        self._Rt = self.R.T.astype(np.float64)
        self.point_hashes = self.hash_many(P)
        self.lookups = 0
        self.materialized = materialize
        self.buckets = {}
        if materialize:
            self._materialize()

    def hash_many(self, X):
        # float matmul goes through BLAS; sums of at most d ones are exact
        sums = (X.astype(np.float64) @ self._Rt).astype(np.int64)
        return (sums & 1).astype(np.uint8)

    def key(self, q):
        return np.packbits(self.hash_many(as_bits(q)[None, :])[0], bitorder="little").tobytes()

    def _materialize(self):
        if self.s > MAX_KEY_BITS:
            raise ResourceError(f"hash length {self.s} exceeds {MAX_KEY_BITS} key bits; "
                                "raise eps or delta, or use lazy buckets")
        if self.threshold > MAX_RADIUS:
            raise ResourceError(f"bucket radius {self.threshold} exceeds {MAX_RADIUS}")
        for pid in reversed(range(self.n)):
            base = self.point_hashes[pid]
            for r in range(self.threshold + 1):
                for flips in itertools.combinations(range(self.s), r):
                    k = base.copy()
                    k[list(flips)] ^= 1
                    self.buckets[np.packbits(k, bitorder="little").tobytes()] = pid

    def lookup(self, key):
        """One random access to the bucket array."""
        self.lookups += 1
        if self.materialized:
            return self.buckets.get(key)
        if key not in self.buckets:
            bits = np.unpackbits(np.frombuffer(key, dtype=np.uint8), bitorder="little")[:self.s]
            dist = np.count_nonzero(self.point_hashes != bits[None, :], axis=1)
            hits = np.flatnonzero(dist <= self.threshold)
            self.buckets[key] = int(hits[0]) if len(hits) else None
        return self.buckets[key]

    def bucket_ok(self, key, pid):
        bits = np.unpackbits(np.frombuffer(key, dtype=np.uint8), bitorder="little")[:self.s]
        return int(np.count_nonzero(self.point_hashes[pid] != bits)) <= self.threshold


def build_decision(points, L, eps, delta, seed, s=None, materialize=False):
    return DecisionTable(points, L, eps, delta, seed, s, materialize)


def query_decision(table, q):
    before = table.lookups
    out = table.lookup(table.key(q))
    assert table.lookups == before + 1
    return out


class AnnIndex:
    """Decision tables for every scale L in 1..d, each replicated `replicas` times.

    Table (replica, L) uses seed splitmix64_word(seed, replica * (d + 1) + L)
    and is built on first use.  Each table's failure probability is
    delta / probe_budget(d), so a whole binary search fails with
    probability at most delta.
    """

    def __init__(self, points, eps, delta, seed, replicas=None, s=None):
        self.P = np.array([as_bits(p) for p in points], dtype=np.uint8)
        if self.P.ndim != 2 or len(self.P) == 0:
            raise InputError("need at least one point")
        self.n, self.d = self.P.shape
        self.eps, self.delta, self.seed = Fraction(eps), Fraction(delta), seed
        self.replicas = self.d if replicas is None else replicas
        self.table_delta = self.delta / probe_budget(self.d)
        self.s = decision_length(self.n, eps, self.table_delta) if s is None else s
        self.members = {}
        for pid in reversed(range(self.n)):
            self.members[self.P[pid].tobytes()] = pid
        self.tables = {}
        self.lookups = 0

    def table(self, replica, L):
        key = (replica, L)
        if key not in self.tables:
            seed = splitmix64_word(self.seed, replica * (self.d + 1) + L)
            self.tables[key] = DecisionTable(self.P, L, self.eps, self.table_delta, seed, self.s)
        return self.tables[key]

    def distance(self, pid, q):
        return int(np.count_nonzero(self.P[pid] != as_bits(q)))


def query_full(index, q, seed=0, majority=False):
    """Binary search for the smallest scale whose decision table answers.

    Returns (point id, scale L).  When every probed table answers
    correctly, the point is within (1+eps)L of q, and the empty answer at
    scale L - 1 shows the nearest point is at distance at least L.
    The number of bucket reads is at most ceil(log2 d) + 1.
    """
    q = as_bits(q)
    if len(q) != index.d:
        raise InputError("query has the wrong dimension")
    rng = SplitMix64(seed)
    probes = 1
    hit = index.members.get(q.tobytes())
    if hit is not None:
        index.lookups += probes
        return hit, 0
    lo, hi, found = 1, index.d, None
    while lo < hi:
        mid = (lo + hi) // 2
        if majority:
            answers = [query_decision(index.table(r, mid), q) for r in range(index.replicas)]
            probes += index.replicas
            yes = [a for a in answers if a is not None]
            res = min(yes) if 2 * len(yes) > len(answers) else None
        else:
            res = query_decision(index.table(rng.randbelow(index.replicas), mid), q)
            probes += 1
        if res is not None:
            hi, found = mid, res
        else:
            lo = mid + 1
    index.lookups += probes
    if found is None:
        # nothing answered below d: every point is within d anyway
        return 0, index.d
    return found, hi


# ---------------------------------------------------------------- gadgets

def l1_to_hamming(points, M, V):
    """Unary code: coordinate value v becomes M v ones followed by M (V - v) zeros."""
    out = []
    for p in points:
        bits = []
        for v in p:
            if v < 0 or v > V or int(v) != v:
                raise InputError("coordinates must be integers in [0, V]")
            bits += [1] * (M * int(v)) + [0] * (M * (V - int(v)))
        out.append(np.array(bits, dtype=np.uint8))
    return out


def epsdisj_l2_gadget(S, T, n, eps):
    """q = eps * chi_S and P = {e_i : i in T}; returns exact squared distances.

    Returns (q, points, squared distances, promise_ok).
    """
    eps = Fraction(eps)
    S, T = set(S), set(T)
    if not S <= set(range(1, n + 1)) or not T <= set(range(1, n + 1)):
        raise InputError("sets must lie in 1..n")
    if len(S) != math.ceil(1 / (eps * eps)):
        raise InputError("|S| must equal ceil(1/eps^2)")
    q = [eps if i in S else Fraction(0) for i in range(1, n + 1)]
    pts = []
    for i in sorted(T):
        e = [Fraction(int(j == i)) for j in range(1, n + 1)]
        pts.append(e)
    sq = [sum((a - b) ** 2 for a, b in zip(q, e)) for e in pts]
    return q, pts, sq, len(S & T) <= 1
