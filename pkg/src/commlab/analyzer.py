"""Brute-force analysis of small communication matrices.

A FunctionMatrix stores one int8 per joint input: 0, 1, or STAR (2) for
inputs outside the promise.  A rectangle (or box, for k players) is
monochromatic for value v when it holds no cell of value 1 - v; STAR cells
fit either colour.

Inputs that are subsets of {1..n} are indexed by bitmask: bit i-1 of the
index says whether element i is present.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import itertools
import math

import numpy as np

from .errors import InputError, ResourceError, VerificationError

STAR = 2
_CHARS = {"0": 0, "1": 1, "*": STAR}


class FunctionMatrix:
    def __init__(self, entries):
        entries = np.asarray(entries, dtype=np.int8)
        if entries.ndim < 1 or entries.size > 1 << 24:
            raise ResourceError("matrix exceeds the 2^24 cell cap")
        if np.any((entries < 0) | (entries > STAR)):
            raise InputError("entries must be 0, 1 or *")
        self.entries = entries

    @property
    def k(self):
        return self.entries.ndim

    @property
    def dims(self):
        return self.entries.shape

    def __getitem__(self, idx):
        return int(self.entries[idx])

    @classmethod
    def from_function(cls, dims, fn):
        """fn maps a tuple of per-player indices to 0, 1 or None (for *)."""
        out = np.empty(dims, dtype=np.int8)
        for idx in itertools.product(*(range(d) for d in dims)):
            v = fn(*idx)
            out[idx] = STAR if v is None else v
        return cls(out)

    def to_text(self):
        head = " ".join(str(v) for v in (self.k,) + self.dims)
        flat = self.entries.reshape(-1, self.dims[-1])
        rows = ["".join("01*"[v] for v in row) for row in flat]
        return head + "\n" + "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = text.strip().splitlines()
        try:
            head = [int(tok) for tok in lines[0].split()]
        except (IndexError, ValueError) as exc:
            raise InputError("matrix header must be `k d1 .. dk`") from exc
        k, dims = head[0], tuple(head[1:])
        if k < 1 or len(dims) != k or min(dims) < 1:
            raise InputError("matrix header does not match its arity")
        body = "".join("".join(line.split()) for line in lines[1:])
        if len(body) != math.prod(dims):
            raise InputError(f"expected {math.prod(dims)} cells, got {len(body)}")
        try:
            vals = [_CHARS[ch] for ch in body]
        except KeyError as exc:
            raise InputError(f"bad cell character {exc}") from exc
        return cls(np.array(vals, dtype=np.int8).reshape(dims))

    def count(self, value):
        return int(np.count_nonzero(self.entries == value))

    def __eq__(self, other):
        return isinstance(other, FunctionMatrix) and np.array_equal(self.entries, other.entries)


# ---------------------------------------------------------------- standard matrices

def eq_matrix(n):
    size = 1 << n
    return FunctionMatrix(np.eye(size, dtype=np.int8))


def disj_matrix(n):
    idx = np.arange(1 << n)
    return FunctionMatrix(((idx[:, None] & idx[None, :]) == 0).astype(np.int8))


def udisj_matrix(n):
    idx = np.arange(1 << n)
    inter = np.vectorize(lambda v: bin(v).count("1"))(idx[:, None] & idx[None, :])
    out = np.full(inter.shape, STAR, dtype=np.int8)
    out[inter == 0] = 1
    out[inter == 1] = 0
    return FunctionMatrix(out)


def mdisj_matrix(k, n):
    """1 if no element is held twice, 0 if some element is held by everyone, else *."""
    size = 1 << n
    full = (1 << n) - 1

    def f(*sets):
        seen = 0
        for s in sets:
            if seen & s:
                break
            seen |= s
        else:
            return 1
        common = full
        for s in sets:
            common &= s
        return 0 if common else None

    return FunctionMatrix.from_function((size,) * k, f)


# ---------------------------------------------------------------- rectangles

@dataclass(frozen=True)
class Rect:
    sides: tuple

    def __post_init__(self):
        sides = tuple(frozenset(s) for s in self.sides)
        if not sides or any(not s for s in sides):
            raise InputError("every side of a rectangle must be nonempty")
        object.__setattr__(self, "sides", sides)

    def cells(self):
        return itertools.product(*(sorted(s) for s in self.sides))

    def size(self):
        return math.prod(len(s) for s in self.sides)

    def contains(self, idx):
        return all(i in s for i, s in zip(idx, self.sides))


def rect_values(M, rect):
    sub = M.entries[np.ix_(*(sorted(s) for s in rect.sides))]
    return set(np.unique(sub).tolist())


def is_monochromatic(M, rect, value):
    return (1 - value) not in rect_values(M, rect)


def verify_cover(M, rects, value):
    """Every value-cell is covered and no rectangle holds the opposite value."""
    for r in rects:
        if len(r.sides) != M.k:
            raise InputError("rectangle arity does not match the matrix")
        if not is_monochromatic(M, r, value):
            return False
    covered = np.zeros(M.dims, dtype=bool)
    for r in rects:
        covered[np.ix_(*(sorted(s) for s in r.sides))] = True
    return bool(np.all(covered[M.entries == value]))


# ---------------------------------------------------------------- fooling sets

@dataclass(frozen=True)
class FoolingSet:
    pairs: tuple
    value: int


def verify_fooling_set(M, F):
    if M.k != 2:
        raise InputError("fooling sets are defined for two players")
    pairs = list(F.pairs)
    for x, y in pairs:
        v = M[x, y]
        if v == STAR:
            raise InputError(f"fooling set uses the * cell ({x}, {y})")
        if v != F.value:
            return False
    other = 1 - F.value
    for (x1, y1), (x2, y2) in itertools.combinations(pairs, 2):
        if M[x1, y2] != other and M[x2, y1] != other:
            return False
    return True


# ---------------------------------------------------------------- covers

def maximal_rectangles(M, value):
    """All maximal value-monochromatic rectangles that touch a value-cell.

    Each is the closure of some row set, so enumerating row subsets finds
    them all.  Returned as (row mask, column mask) pairs.
    """
    rows, cols = M.dims
    ok = M.entries != (1 - value)
    col_ok = [sum(1 << c for c in range(cols) if ok[r, c]) for r in range(rows)]
    row_ok = [sum(1 << r for r in range(rows) if ok[r, c]) for c in range(cols)]
    target = [sum(1 << c for c in range(cols) if M.entries[r, c] == value) for r in range(rows)]
    full_cols = (1 << cols) - 1
    found = set()
    # fold subsets incrementally: colmask(A) = colmask(A without top bit) & col_ok[top]
    colmask = [full_cols] * (1 << rows)
    for a in range(1, 1 << rows):
        top = a.bit_length() - 1
        cm = colmask[a ^ (1 << top)] & col_ok[top]
        colmask[a] = cm
        if not cm:
            continue
        rm = (1 << rows) - 1
        c = cm
        while c:
            low = c & -c
            rm &= row_ok[low.bit_length() - 1]
            c ^= low
        if any(target[r] & cm for r in range(rows) if rm >> r & 1):
            found.add((rm, cm))
    return sorted(found)


def _mask_rect(rm, cm):
    return Rect((_bits(rm), _bits(cm)))


def _bits(mask):
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def min_cover(M, value):
    """Exact minimum number of value-monochromatic rectangles covering the value-cells."""
    if M.k != 2:
        raise InputError("min_cover handles two players")
    rows, cols = M.dims
    if rows * cols > 256:
        raise ResourceError("exact cover limited to 256 cells")
    if rows > cols:
        size, cover = min_cover(FunctionMatrix(M.entries.T), value)
        cover = [Rect((r.sides[1], r.sides[0])) for r in cover]
        return size, cover
    cell = lambda r, c: r * cols + c
    need = 0
    for r in range(rows):
        for c in range(cols):
            if M.entries[r, c] == value:
                need |= 1 << cell(r, c)
    if not need:
        return 0, []
    rects = []
    for rm, cm in maximal_rectangles(M, value):
        m = 0
        for r in _bits(rm):
            for c in _bits(cm):
                m |= 1 << cell(r, c)
        rects.append((m & need, rm, cm))
    # drop rectangles whose useful cells are contained in another's
    rects.sort(key=lambda t: -t[0].bit_count())
    kept = []
    for t in rects:
        if not any(t[0] & ~u[0] == 0 for u in kept):
            kept.append(t)
    by_cell = {}
    for t in kept:
        m = t[0]
        while m:
            low = m & -m
            by_cell.setdefault(low, []).append(t)
            m ^= low
    biggest = kept[0][0].bit_count()

    # greedy start
    best = []
    left = need
    while left:
        t = max(kept, key=lambda u: (u[0] & left).bit_count())
        best.append(t)
        left &= ~t[0]

    def search(left, chosen):
        nonlocal best
        if not left:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + -(-left.bit_count() // biggest) >= len(best):
            return
        # branch on the uncovered cell with the fewest options
        opts = None
        m = left
        while m:
            low = m & -m
            o = by_cell[low]
            if opts is None or len(o) < len(opts):
                opts = o
            m ^= low
        for t in sorted(opts, key=lambda u: -(u[0] & left).bit_count()):
            chosen.append(t)
            search(left & ~t[0], chosen)
            chosen.pop()

    search(need, [])
    cover = [_mask_rect(rm, cm) for _, rm, cm in best]
    if not verify_cover(M, cover, value):
        raise VerificationError("min_cover produced an invalid cover")
    return len(cover), cover


def nondet_cc(M, value=1):
    size, _ = min_cover(M, value)
    return math.ceil(math.log2(size)) if size > 1 else 0


# ---------------------------------------------------------------- deterministic CC

def det_cc(M):
    """Exact deterministic communication complexity by memoized recursion."""
    if M.k != 2:
        raise InputError("det_cc handles two players")
    rows, cols = M.dims
    if rows > 8 or cols > 8:
        raise ResourceError("det_cc limited to 8 x 8")
    e = M.entries

    def masks(axis_len, other_len, get):
        ones = [sum(1 << j for j in range(other_len) if get(i, j) == 1) for i in range(axis_len)]
        zeros = [sum(1 << j for j in range(other_len) if get(i, j) == 0) for i in range(axis_len)]
        return ones, zeros

    r1, r0 = masks(rows, cols, lambda i, j: e[i, j])

    def union_table(parts):
        t = [0] * (1 << len(parts))
        for a in range(1, len(t)):
            top = a.bit_length() - 1
            t[a] = t[a ^ (1 << top)] | parts[top]
        return t

    ones_of, zeros_of = union_table(r1), union_table(r0)

    def subsplits(mask):
        # proper nonempty subsets containing the lowest element, each unordered split once
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        while True:
            part = sub | low
            if part != mask:
                yield part
            if sub == 0:
                break
            sub = (sub - 1) & rest

    @lru_cache(maxsize=None)
    def cc(a, b):
        if not (ones_of[a] & b and zeros_of[a] & b):
            return 0
        best = math.inf
        for splits, make in ((subsplits(a), lambda p: ((p, b), (a ^ p, b))),
                             (subsplits(b), lambda p: ((a, p), (a, b ^ p)))):
            for p in splits:
                left, right = make(p)
                c = cc(*left)
                if c + 1 >= best:
                    continue
                c = max(c, cc(*right))
                if c + 1 < best:
                    best = c + 1
                    if best == 1:
                        return 1
        return best

    return cc((1 << rows) - 1, (1 << cols) - 1)


# ---------------------------------------------------------------- boxes

def max_box_ones(M):
    """Largest number of 1-cells in a box with no 0-cell.

    Player sets are chosen one at a time; after each choice the matrix is
    collapsed along that axis (zero present anywhere, ones summed), and
    the last player simply takes every index still free of zeros.
    """
    if M.entries.size > 1 << 20:
        raise ResourceError("box search limited to 2^20 cells")
    if math.prod(2 ** d for d in M.dims[:-1]) > 1 << 22:
        raise ResourceError("box search would enumerate too many subsets")
    zero = M.entries == 0
    ones = (M.entries == 1).astype(np.int64)
    best = [0, None]

    def rec(z, o, chosen):
        if z.ndim == 1:
            free = ~z
            count = int(o[free].sum())
            if count > best[0]:
                best[0] = count
                best[1] = chosen + [frozenset(np.flatnonzero(free).tolist())]
            return
        d = z.shape[0]
        for a in range(1, 1 << d):
            sel = _bits(a)
            zz = z[sel].any(axis=0)
            if zz.all():
                continue
            oo = o[sel].sum(axis=0)
            if oo[~zz].sum() <= best[0]:
                continue  # even every remaining free cell cannot beat the incumbent
            rec(zz, oo, chosen + [frozenset(sel)])

    rec(zero, ones, [])
    if best[1] is None:
        return 0, None
    box = Rect(tuple(best[1]))
    if 0 in rect_values(M, box):
        raise VerificationError("box search returned a box with a 0-cell")
    return best[0], box


# ---------------------------------------------------------------- Yao

@dataclass
class YaoReport:
    worst_case_error: Fraction
    mixture_dist_error: Fraction
    component_errors: list
    best_component: int


def yao_check(M, D, mixture):
    """Compare a public-coin protocol with its deterministic components.

    D maps (x, y) to a rational weight; mixture is a list of (weight, fn)
    with fn(x, y) the component's output.  * cells are never wrong.
    """
    if M.k != 2:
        raise InputError("yao_check handles two players")
    if sum(Fraction(w) for w in D.values()) != 1:
        raise InputError("distribution weights must sum to 1")
    if sum(Fraction(w) for w, _ in mixture) != 1:
        raise InputError("mixture weights must sum to 1")
    rows, cols = M.dims
    wrong = {}
    for i, (_, fn) in enumerate(mixture):
        for x in range(rows):
            for y in range(cols):
                v = M[x, y]
                wrong[i, x, y] = v != STAR and fn(x, y) != v
    worst = max(sum(Fraction(w) for i, (w, _) in enumerate(mixture) if wrong[i, x, y])
                for x in range(rows) for y in range(cols))
    comp = [sum((Fraction(p) for (x, y), p in D.items() if wrong[i, x, y]), Fraction(0))
            for i in range(len(mixture))]
    mix = sum(Fraction(w) * c for (w, _), c in zip(mixture, comp))
    best = min(range(len(comp)), key=lambda i: (comp[i], i))
    if not comp[best] <= mix <= worst:
        raise VerificationError("averaging argument violated")
    return YaoReport(worst, mix, comp, best)


# ---------------------------------------------------------------- counting

def ball_volume(n, r):
    if n > 1024:
        raise InputError("ball volume limited to n <= 1024")
    return sum(math.comb(n, i) for i in range(0, min(r, n) + 1))


def ball_bound_holds(n, r, rate_num=861, rate_den=1000):
    """Exact check of ball_volume(n, r) < n * 2^(rate * n) using integer powers."""
    v = ball_volume(n, r)
    # v < n 2^(rate n)  <=>  (v / n)^den < 2^(num * n)
    return v ** rate_den < n ** rate_den * 2 ** (rate_num * n)
