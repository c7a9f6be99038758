"""Reductions between problems, compressive-sensing decoding and welfare instances.

Bit vectors are numpy uint8 arrays (strings and lists are accepted).
Indices handed to users are 1-based, matching universe items in streams.
"""
from dataclasses import dataclass
from fractions import Fraction
import itertools
import json
import math

import numpy as np

from .errors import (
    ConstructionFailure, DecodeError, InputError, ResourceError,
)
from .gf2hash import SplitMix64
from .protocols import as_bits
from .sketches import Stream


# ---------------------------------------------------------------- Index

def index_to_disj(x, i):
    """Bob turns his index into the indicator vector e_i."""
    x = as_bits(x)
    if not 1 <= i <= len(x):
        raise InputError("index out of range")
    y = np.zeros(len(x), dtype=np.uint8)
    y[i - 1] = 1
    return x.copy(), y


def disj(x, y):
    return int(not np.any(as_bits(x) & as_bits(y)))


def _gh_bit(x, i, r):
    n = len(x)
    a = int(2 * int(np.count_nonzero(x != r)) < n)
    return a, int(r[i - 1])


def index_to_gh(x, i, q, tape):
    """m = q n repetitions of: shared r, Alice a = [d(x,r) < n/2], Bob b = r_i."""
    x = as_bits(x)
    n = len(x)
    if n % 2 == 0:
        raise InputError("index length must be odd")
    if not 1 <= i <= n or q < 1:
        raise InputError("bad index or blowup")
    xs, ys = [], []
    for _ in range(q * n):
        a, b = _gh_bit(x, i, tape.read_bits(n))
        xs.append(a)
        ys.append(b)
    return np.array(xs, dtype=np.uint8), np.array(ys, dtype=np.uint8)


def gh_agreement_exact(x, i):
    """Pr[a = b] over all 2^n strings r."""
    x = as_bits(x)
    n = len(x)
    agree = 0
    for bits in itertools.product((0, 1), repeat=n):
        a, b = _gh_bit(x, i, np.array(bits, dtype=np.uint8))
        agree += a == b
    return Fraction(agree, 2 ** n)


def gh_balanced_probability(n):
    """Chance the other n-1 coordinates split evenly: C(n-1, (n-1)/2) / 2^(n-1)."""
    return Fraction(math.comb(n - 1, (n - 1) // 2), 2 ** (n - 1))


def gh_via_f0(x, y, f0_estimator=None):
    """2 F0 - |x| - |y| on the stream of x's ones followed by y's ones."""
    x, y = as_bits(x), as_bits(y)
    items = [int(i) + 1 for i in np.flatnonzero(x)] + [int(i) + 1 for i in np.flatnonzero(y)]
    if f0_estimator is None:
        est = Fraction(len(set(items)))
    else:
        est = Fraction(f0_estimator(items))
    return 2 * est - int(x.sum()) - int(y.sum())


def disj_via_finfty(x, y, mode="exact", seed=0):
    """Declare disjoint iff the (possibly 1.2-approximate) F-infinity is at most 4/3.

    The approximate mode multiplies the exact answer by a factor drawn from
    [0.8, 1.2] in steps of 1/1000.
    """
    x, y = as_bits(x), as_bits(y)
    if len(x) != len(y):
        raise InputError("inputs must have the same length")
    items = [int(i) + 1 for i in np.flatnonzero(x)] + [int(i) + 1 for i in np.flatnonzero(y)]
    f = Fraction(Stream(max(len(x), 1), items).max_frequency())
    if mode == "approx":
        u = SplitMix64(seed).randbelow(401) - 200
        f *= 1 + Fraction(u, 1000)
    elif mode != "exact":
        raise InputError("mode must be exact or approx")
    return int(f <= Fraction(4, 3))


def disj_via_exact_fk(x, y, k):
    """Alice also sends |x|; then F_k = |x| + |y| + c (2^k - 2) reveals c = |x AND y|.

    Returns (disjoint bit, c, extra bits Alice sent).
    """
    x, y = as_bits(x), as_bits(y)
    if k == 1:
        raise InputError("F_1 carries no intersection information")
    items = [int(i) + 1 for i in np.flatnonzero(x)] + [int(i) + 1 for i in np.flatnonzero(y)]
    fk = Stream(max(len(x), 1), items).moment(k)
    c = Fraction(fk - int(x.sum()) - int(y.sum()), 2 ** k - 2)
    extra = max(1, (len(x)).bit_length())
    return int(c == 0), int(c), extra


def pad_gh(x, y, n):
    x, y = as_bits(x), as_bits(y)
    if len(x) != len(y):
        raise InputError("inputs must have the same length")
    if len(x) > n:
        raise InputError("cannot pad to a shorter length")
    z = np.zeros(n - len(x), dtype=np.uint8)
    return np.concatenate([x, z]), np.concatenate([y, z])


# ---------------------------------------------------------------- codebooks

@dataclass
class Codebook:
    n: int
    k: int
    vectors: list

    def __post_init__(self):
        self.vectors = [as_bits(v) for v in self.vectors]
        size = len(self.vectors)
        if size < 1 or size & (size - 1):
            raise InputError("codebook size must be a power of two")
        for v in self.vectors:
            if len(v) != self.n or int(v.sum()) != self.k:
                raise InputError("every codeword must be k-sparse of length n")
        need = self.min_distance
        for a, b in itertools.combinations(self.vectors, 2):
            if int(np.count_nonzero(a != b)) < need:
                raise InputError("codewords too close")

    @property
    def min_distance(self):
        return max(1, math.ceil(Fraction(self.k, 10)))

    def __len__(self):
        return len(self.vectors)

    def index(self, v):
        v = as_bits(v)
        for i, c in enumerate(self.vectors):
            if np.array_equal(c, v):
                return i
        raise InputError("vector not in codebook")


def _random_sparse(n, k, rng):
    pos = list(range(n))
    for j in range(k):
        r = j + rng.randbelow(n - j)
        pos[j], pos[r] = pos[r], pos[j]
    v = np.zeros(n, dtype=np.uint8)
    v[pos[:k]] = 1
    return v


def build_codebook(n, k, target, seed=0, budget=100_000):
    """Rejection-sample k-sparse vectors pairwise at distance >= ceil(k/10)."""
    if target < 1 or target & (target - 1):
        raise InputError("target size must be a power of two")
    if not 1 <= k <= n:
        raise InputError("need 1 <= k <= n")
    need = max(1, math.ceil(Fraction(k, 10)))
    rng = SplitMix64(seed)
    kept = []
    for _ in range(budget):
        v = _random_sparse(n, k, rng)
        if all(int(np.count_nonzero(v != u)) >= need for u in kept):
            kept.append(v)
            if len(kept) == target:
                return Codebook(n, k, kept)
    raise ConstructionFailure(f"only {len(kept)} of {target} codewords within budget")


def all_sparse_codebook(n, k):
    """Every k-sparse vector, truncated to the largest power-of-two count."""
    vecs = []
    for pos in itertools.combinations(range(n), k):
        v = np.zeros(n, dtype=np.uint8)
        v[list(pos)] = 1
        vecs.append(v)
    size = 1 << (len(vecs).bit_length() - 1)
    return Codebook(n, k, vecs[:size])


# ---------------------------------------------------------------- toy sensing

def random_01_matrix(rows, cols, seed):
    words = SplitMix64(seed).take(rows * cols) if rows * cols else np.zeros(0, np.uint64)
    return (words >> np.uint64(63)).astype(np.int64).reshape(rows, cols)


class ToySensing:
    """Uniform 0/1 sensing matrix with ceil(3 log2 |X|) rows and scan-based recovery."""

    def __init__(self, vectors, seed):
        self.vectors = [as_bits(v).astype(np.int64) for v in vectors]
        if not self.vectors:
            raise InputError("need at least one vector")
        size = max(2, len(self.vectors))
        self.m = math.ceil(3 * math.log2(size))
        self.A = random_01_matrix(self.m, len(self.vectors[0]), seed)

    def measure(self, x):
        return self.A @ as_bits(x).astype(np.int64)

    def recover(self, b):
        b = np.asarray(b, dtype=np.int64)
        for v in self.vectors:
            if np.array_equal(self.A @ v, b):
                return v.astype(np.uint8)
        raise DecodeError("no codeword matches the measurement")

    def injective(self):
        images = {tuple(self.A @ v) for v in self.vectors}
        return len(images) == len(self.vectors)


def toy_sensing(codebook_or_vectors, seed):
    vecs = codebook_or_vectors.vectors if isinstance(codebook_or_vectors, Codebook) \
        else codebook_or_vectors
    return ToySensing(vecs, seed)


# ---------------------------------------------------------------- block decoding

def default_alpha(c=1):
    return max(2, 200 * Fraction(c))


def cs_encode(blocks, alpha):
    """y = sum_{j=1..B} alpha^j x_j as exact integers (or rationals)."""
    y = None
    for j, x in enumerate(blocks, start=1):
        term = [alpha ** j * int(b) for b in as_bits(x)]
        y = term if y is None else [a + t for a, t in zip(y, term)]
    return y


def top_k(v, k):
    """Best k-term approximation: keep the k largest magnitudes (lower index wins ties)."""
    order = sorted(range(len(v)), key=lambda i: (-abs(v[i]), i))
    out = [0] * len(v)
    for i in order[:k]:
        out[i] = v[i]
    return out


def l1(u, v):
    return sum(abs(a - b) for a, b in zip(u, v))


def matvec(A, v):
    return [sum(int(a) * x for a, x in zip(row, v)) for row in A]


class TopKOracle:
    """Test harness: recovers v from A v by knowing y and the codebook.

    The decoder only ever asks about A (y - z) where z is a sum of scaled
    codewords for the top blocks.  The harness tries every such suffix,
    and answers with top_k of the unique matching v.  An ambiguous match
    means A cannot tell two candidates apart, reported as a decode error.
    """

    def __init__(self, A, y, codebook, alpha, blocks):
        self.A = A
        self.y = list(y)
        self.cb = codebook
        self.alpha = alpha
        self.B = blocks
        self.calls = 0
        self._table = None

    def _candidates(self):
        # every v = y - (alpha^B x_B + ... ) over suffixes of any depth, with A v
        if self._table is None:
            cands = [tuple(self.y)]
            for depth in range(1, self.B + 1):
                for combo in itertools.product(self.cb.vectors, repeat=depth):
                    z = [0] * self.cb.n
                    for off, x in enumerate(combo):
                        j = self.B - off
                        z = [a + self.alpha ** j * int(t) for a, t in zip(z, x)]
                    cands.append(tuple(a - t for a, t in zip(self.y, z)))
            cands = list(dict.fromkeys(cands))
            big = max(abs(v) for c in cands for v in c) * max(1, self.cb.n)
            dtype = np.int64 if big < 1 << 62 else object
            V = np.array(cands, dtype=dtype)
            images = V @ np.array(self.A, dtype=dtype).T
            self._table = (cands, images)
        return self._table

    def __call__(self, b):
        self.calls += 1
        cands, images = self._candidates()
        rows = np.flatnonzero(np.all(images == np.array(list(b), dtype=images.dtype), axis=1))
        if len(rows) != 1:
            raise DecodeError(f"oracle found {len(rows)} preimages")
        return top_k(list(cands[rows[0]]), self.cb.k)


class ExactOracle:
    """Zero-residual oracle: scans scaled codewords alpha^j x for a match."""

    def __init__(self, A, codebook, alpha, blocks):
        self.A = A
        self.cb = codebook
        self.alpha = alpha
        self.B = blocks

    def __call__(self, b):
        b = list(b)
        if all(v == 0 for v in b):
            return [0] * self.cb.n
        for j in range(1, self.B + 1):
            for x in self.cb.vectors:
                v = [self.alpha ** j * int(t) for t in x]
                if matvec(self.A, v) == b:
                    return v
        raise DecodeError("no scaled codeword matches")


@dataclass
class DecodeStep:
    j: int
    chosen: int
    best: Fraction
    runner_up: Fraction
    close_bound: Fraction
    far_bound: Fraction


def cs_decode(Ay, A, oracle, codebook, alpha, B, check_margins=True):
    """Peel blocks from the top: w = R(A(y - z)), snap to the nearest alpha^j x.

    Each step asserts that the chosen codeword is within .02 k alpha^j of w
    and every other codeword is at least .08 k alpha^j away.
    Returns (codewords x_1..x_B, list of DecodeStep).
    """
    z = [0] * codebook.n
    found = [None] * B
    steps = []
    k = codebook.k
    for j in range(B, 0, -1):
        Az = matvec(A, z)
        w = oracle([a - b for a, b in zip(Ay, Az)])
        scale = alpha ** j
        dists = [l1(w, [scale * int(t) for t in x]) for x in codebook.vectors]
        order = sorted(range(len(dists)), key=lambda i: (dists[i], i))
        best = order[0]
        runner = dists[order[1]] if len(order) > 1 else None
        close, far = Fraction(2, 100) * k * scale, Fraction(8, 100) * k * scale
        if check_margins:
            if dists[best] > close:
                raise DecodeError(f"block {j}: nearest codeword at {dists[best]} > {close}")
            if runner is not None and runner < far:
                raise DecodeError(f"block {j}: runner-up at {runner} < {far}")
        steps.append(DecodeStep(j, best, Fraction(dists[best]),
                                Fraction(runner) if runner is not None else None, close, far))
        x = codebook.vectors[best]
        found[j - 1] = x
        z = [a + scale * int(t) for a, t in zip(z, x)]
    return found, steps


def sensing_rows(codebook, B):
    return math.ceil(3 * B * math.log2(max(2, len(codebook))))


def cs_round_trip(blocks, codebook, alpha=None, seed=0, oracle="topk"):
    """Encode, measure with a random 0/1 matrix, decode; returns (decoded, steps)."""
    alpha = default_alpha() if alpha is None else alpha
    B = len(blocks)
    y = cs_encode(blocks, alpha)
    A = random_01_matrix(sensing_rows(codebook, B), codebook.n, seed).tolist()
    Ay = matvec(A, y)
    if oracle == "topk":
        R = TopKOracle(A, y, codebook, alpha, B)
    elif oracle == "exact":
        R = ExactOracle(A, codebook, alpha, B)
    else:
        raise InputError("oracle must be topk or exact")
    return cs_decode(Ay, A, R, codebook, alpha, B)


def amplified_runs(n):
    return math.ceil(math.log2(math.log2(n))) + 3 if n > 2 else 3


def cs_decode_amplified(blocks, codebook, alpha=None, seed=0, runs=None):
    """Independent decodes with fresh matrices; per-block majority vote.

    A run that raises a decode error casts no votes.
    """
    runs = amplified_runs(codebook.n) if runs is None else runs
    rng = SplitMix64(seed)
    votes = [dict() for _ in blocks]
    failures = 0
    for _ in range(runs):
        try:
            found, _ = cs_round_trip(blocks, codebook, alpha, rng.next_u64())
        except DecodeError:
            failures += 1
            continue
        for j, x in enumerate(found):
            key = codebook.index(x)
            votes[j][key] = votes[j].get(key, 0) + 1
    out = []
    for v in votes:
        if not v:
            raise DecodeError("every run failed")
        key, count = min(v.items(), key=lambda kv: (-kv[1], kv[0]))
        if 2 * count <= runs:
            raise DecodeError("no majority for a block")
        out.append(codebook.vectors[key])
    return out, failures


# ---------------------------------------------------------------- welfare

def is_intersecting(partitions, k):
    """Classes of different partitions owned by different players always meet."""
    for pj, pl in itertools.combinations(partitions, 2):
        for i in range(k):
            for i2 in range(k):
                if i == i2:
                    continue
                if not any(a == i and b == i2 for a, b in zip(pj, pl)):
                    return False
    return True


def intersecting_bound(m, k, t):
    """Union bound k^2 t^2 e^(-m/k^2) on a random family failing."""
    return k * k * t * t * math.exp(-m / (k * k))


def intersecting_family(m, k, t, seed=0, budget=10_000):
    """t random k-partitions of m items (item -> class lists), redrawn until intersecting."""
    rng = SplitMix64(seed)
    for _ in range(budget):
        fam = [[rng.randbelow(k) for _ in range(m)] for _ in range(t)]
        if is_intersecting(fam, k):
            return fam
    raise ConstructionFailure("no intersecting family within budget")


class WelfareInstance:
    """Player i values a bundle T at 1 iff T contains class i of some partition j in S_i.

    In subadditive mode every nonempty bundle gets one extra unit.
    Bundles are bitmasks over the m items.
    """

    def __init__(self, k, m, partitions, inputs, subadditive=False):
        if len(inputs) != k:
            raise InputError("need one input set per player")
        self.k, self.m = k, m
        self.partitions = [list(p) for p in partitions]
        self.inputs = [sorted(set(s)) for s in inputs]
        self.subadditive = subadditive
        for p in self.partitions:
            if len(p) != m or any(not 0 <= c < k for c in p):
                raise InputError("partition must map every item to a class 0..k-1")
        for s in self.inputs:
            if any(not 0 <= j < len(self.partitions) for j in s):
                raise InputError("input refers to an unknown partition")
        if not is_intersecting(self.partitions, k):
            raise InputError("partition family is not intersecting")
        self._tables = None

    def class_mask(self, j, i):
        return sum(1 << item for item, c in enumerate(self.partitions[j]) if c == i)

    def value(self, i, bundle):
        v = int(any(self.class_mask(j, i) & ~bundle == 0 for j in self.inputs[i]))
        if self.subadditive and bundle:
            v += 1
        return v

    def tables(self):
        if self._tables is None:
            if self.m > 16:
                raise ResourceError("valuation tables limited to 16 items")
            self._tables = [[self.value(i, b) for b in range(1 << self.m)] for i in range(self.k)]
        return self._tables

    def optimal_welfare(self):
        """Best total value over all ways to hand every item to some player."""
        if self.k ** self.m > 1 << 22:
            raise ResourceError("allocation search too large")
        tabs = self.tables()
        full = (1 << self.m) - 1

        def best(i, left):
            if i == self.k - 1:
                return tabs[i][left]
            top = 0
            sub = left
            while True:
                top = max(top, tabs[i][sub] + best(i + 1, left ^ sub))
                if sub == 0:
                    break
                sub = (sub - 1) & left
            return top

        return best(0, full)

    def to_json(self):
        return json.dumps({"k": self.k, "m": self.m, "partitions": self.partitions,
                           "inputs": self.inputs, "subadditive": self.subadditive},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["k"], d["m"], d["partitions"], d["inputs"], d.get("subadditive", False))


def mdisj_to_welfare(inputs, family, subadditive=False):
    k = len(inputs)
    return WelfareInstance(k, len(family[0]), family, inputs, subadditive)


def valuation_checks(inst):
    """(monotone, subadditive) over all bundle pairs; exhaustive, so keep m small."""
    if inst.m > 8:
        raise ResourceError("exhaustive valuation checks limited to 8 items")
    mono = sub = True
    size = 1 << inst.m
    for tab in inst.tables():
        for s in range(size):
            for t in range(size):
                if s & ~t == 0 and tab[s] > tab[t]:
                    mono = False
                if tab[s | t] > tab[s] + tab[t]:
                    sub = False
    return mono, sub
