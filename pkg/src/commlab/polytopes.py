"""Exact linear programming, the permutahedron extended formulation, and slack matrices.

All arithmetic is over Fraction.  A RationalLinearSystem holds rows of
the form  C x + D y <= d  (kind "le") or  C x + D y = d  (kind "eq"),
with the x-block first.  Variables are free unless a row says otherwise.
"""
from dataclasses import dataclass
from fractions import Fraction
import itertools
import math

import numpy as np

from .analyzer import FunctionMatrix, Rect, verify_cover
from .errors import CommlabError, InputError
from .protocols import ProtocolOutcome, Transcript, bitstr


class Infeasible(CommlabError):
    exit_code = 3


class Unbounded(CommlabError):
    exit_code = 3


def _frac(tok):
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad rational {tok!r}") from exc


class RationalLinearSystem:
    def __init__(self, n, p, rows=()):
        if n < 0 or p < 0:
            raise InputError("block sizes must be nonnegative")
        self.n, self.p = n, p
        self.rows = []
        for kind, coeffs, rhs in rows:
            self.add(kind, coeffs, rhs)

    @property
    def width(self):
        return self.n + self.p

    def add(self, kind, coeffs, rhs):
        if kind not in ("le", "eq"):
            raise InputError(f"row kind must be le or eq, not {kind!r}")
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != self.width:
            raise InputError(f"row has {len(coeffs)} coefficients, expected {self.width}")
        self.rows.append((kind, coeffs, Fraction(rhs)))

    def count(self, kind):
        return sum(1 for k, _, _ in self.rows if k == kind)

    def satisfied(self, point):
        point = [Fraction(v) for v in point]
        for kind, a, b in self.rows:
            lhs = sum(ai * vi for ai, vi in zip(a, point))
            if (kind == "le" and lhs > b) or (kind == "eq" and lhs != b):
                return False
        return True

    def to_text(self):
        out = [f"vars {self.n} {self.p}"]
        for kind, a, b in self.rows:
            toks = [f"{v.numerator}/{v.denominator}" for v in a + (b,)]
            out.append(" ".join([kind] + toks))
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0][0] != "vars" or len(lines[0]) != 3:
            raise InputError("first line must be 'vars n p'")
        try:
            n, p = int(lines[0][1]), int(lines[0][2])
        except ValueError as exc:
            raise InputError("bad block sizes") from exc
        sys = cls(n, p)
        for toks in lines[1:]:
            vals = [_frac(t) for t in toks[1:]]
            if not vals:
                raise InputError("empty row")
            sys.add(toks[0], vals[:-1], vals[-1])
        return sys

    def permuted(self, order):
        return RationalLinearSystem(self.n, self.p, [self.rows[i] for i in order])


# ---------------------------------------------------------------- simplex

def _pivot(T, obj, r, c):
    row = T[r]
    pv = row[c]
    if pv != 1:
        row[:] = [v / pv for v in row]
    nz = [j for j, v in enumerate(row) if v]
    for i, other in enumerate(T):
        if i != r and other[c]:
            f = other[c]
            for j in nz:
                other[j] -= f * row[j]
    if obj[c]:
        f = obj[c]
        for j in nz:
            obj[j] -= f * row[j]


def _run(T, basis, obj, allowed):
    """Maximize with Bland's rule.  obj holds reduced costs; obj[-1] is -value."""
    while True:
        enter = next((j for j in allowed if obj[j] > 0), None)
        if enter is None:
            return
        best, leave = None, None
        for i, row in enumerate(T):
            if row[enter] > 0:
                ratio = row[-1] / row[enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise Unbounded("objective is unbounded")
        _pivot(T, obj, leave, enter)
        basis[leave] = enter


def simplex_max(A, b, c):
    """max c.z subject to A z = b, z >= 0, by two-phase simplex with Bland's rule.

    Returns (value, z).  Raises Infeasible or Unbounded.
    """
    m, ncol = len(A), len(c)
    T = []
    for row, rhs in zip(A, b):
        row = [Fraction(v) for v in row]
        rhs = Fraction(rhs)
        if rhs < 0:
            row, rhs = [-v for v in row], -rhs
        T.append(row + [Fraction(0)] * m + [rhs])
    for i in range(m):
        T[i][ncol + i] = Fraction(1)
    basis = [ncol + i for i in range(m)]
    # phase one: maximize -(sum of artificials)
    obj = [sum((T[i][j] for i in range(m)), Fraction(0)) for j in range(ncol)]
    obj += [Fraction(0)] * m + [sum((T[i][-1] for i in range(m)), Fraction(0))]
    _run(T, basis, obj, range(ncol))
    if obj[-1] != 0:
        raise Infeasible("no point satisfies the system")
    # drive zero-level artificials out; drop rows that are redundant
    i = 0
    while i < len(T):
        if basis[i] >= ncol:
            j = next((j for j in range(ncol) if T[i][j] != 0), None)
            if j is None:
                del T[i], basis[i]
                continue
            _pivot(T, [Fraction(0)] * len(obj), i, j)
            basis[i] = j
        i += 1
    T = [row[:ncol] + row[-1:] for row in T]
    # phase two
    c = [Fraction(v) for v in c]
    obj = c + [Fraction(0)]
    for i, j in enumerate(basis):
        if obj[j]:
            f = obj[j]
            obj = [o - f * t for o, t in zip(obj, T[i])]
    _run(T, basis, obj, range(ncol))
    z = [Fraction(0)] * ncol
    for i, j in enumerate(basis):
        z[j] = T[i][-1]
    return sum((ci * zi for ci, zi in zip(c, z)), Fraction(0)), z


def lp_optimize(sys, objective, maximize=True):
    """Optimize a linear function of the x-block over sys.

    `objective` has one coefficient per x variable.  Returns (value, x, y)
    at a basic optimal solution.  Free variables are split as u - v.
    """
    if len(objective) != sys.n:
        raise InputError("objective needs one coefficient per x variable")
    w = sys.width
    les = [r for r in sys.rows if r[0] == "le"]
    A, b = [], []
    for kind, a, rhs in sys.rows:
        row = list(a) + [-v for v in a] + [Fraction(0)] * len(les)
        A.append(row)
        b.append(rhs)
    s = 0
    for i, (kind, _, _) in enumerate(sys.rows):
        if kind == "le":
            A[i][2 * w + s] = Fraction(1)
            s += 1
    sign = 1 if maximize else -1
    obj = [sign * Fraction(v) for v in objective] + [Fraction(0)] * (sys.p)
    c = obj + [-v for v in obj] + [Fraction(0)] * len(les)
    value, z = simplex_max(A, b, c)
    point = [z[i] - z[w + i] for i in range(w)]
    return sign * value, point[:sys.n], point[sys.n:]


def is_feasible(sys):
    try:
        lp_optimize(sys, [0] * sys.n)
    except Infeasible:
        return False
    return True


def fix_x(sys, x):
    """Copy of sys with the x-block pinned to x by equality rows."""
    out = RationalLinearSystem(sys.n, sys.p, sys.rows)
    for i, v in enumerate(x):
        out.add("eq", [int(j == i) for j in range(sys.width)], v)
    return out


# ---------------------------------------------------------------- permutahedron

def permutahedron_ef(n, relaxed=False):
    """Extended formulation over (x, y) with y an n x n matrix, y_ij at index i*n + j.

    Rows: every row sum of y is 1, every column sum is 1, y >= 0, and
    x_i = sum_j j y_ij.  That is n^2 + 3n constraints.  With relaxed=True
    the row and column sums are only bounded by 1; that set also contains
    partial permutation matrices, so its projection is larger than the
    permutahedron.
    """
    if not 2 <= n <= 5:
        raise InputError("permutahedron_ef needs 2 <= n <= 5")
    w = n + n * n
    sys = RationalLinearSystem(n, n * n)
    y = lambda i, j: n + i * n + j
    kind = "le" if relaxed else "eq"
    for i in range(n):
        a = [0] * w
        for j in range(n):
            a[y(i, j)] = 1
        sys.add(kind, a, 1)
    for j in range(n):
        a = [0] * w
        for i in range(n):
            a[y(i, j)] = 1
        sys.add(kind, a, 1)
    for i in range(n):
        for j in range(n):
            a = [0] * w
            a[y(i, j)] = -1
            sys.add("le", a, 0)
    for i in range(n):
        a = [0] * w
        a[i] = 1
        for j in range(n):
            a[y(i, j)] = -(j + 1)
        sys.add("eq", a, 0)
    return sys


def permutation_point(perm):
    """(x, y) for a permutation given as the tuple (pi(1), ..., pi(n))."""
    n = len(perm)
    y = [0] * (n * n)
    for i, v in enumerate(perm):
        y[i * n + v - 1] = 1
    return list(perm) + y


def brute_max(objective):
    n = len(objective)
    return max(sum(c * v for c, v in zip(objective, p))
               for p in itertools.permutations(range(1, n + 1)))


# ---------------------------------------------------------------- slack matrices

@dataclass
class SlackMatrix:
    faces: list       # (a, b) pairs, meaning a.v <= b
    vertices: list
    entries: list

    @classmethod
    def build(cls, faces, vertices):
        entries = []
        for a, b in faces:
            row = [Fraction(b) - sum(Fraction(ai) * vi for ai, vi in zip(a, v)) for v in vertices]
            if any(e < 0 for e in row):
                raise InputError("a vertex violates a face inequality")
            entries.append(row)
        return cls(list(faces), list(vertices), entries)

    def support(self):
        return FunctionMatrix([[int(e > 0) for e in row] for row in self.entries])


def _members(mask, n):
    return [i for i in range(n) if mask >> i & 1]


def cor_face(S, n):
    """The linearized face for S, written as a.y <= 1 over the n*n entries of y.

    Diagonal entries in S get +1 and off-diagonal pairs inside S get -1,
    which is the inequality -sum y_ii + sum y_ij + 1 >= 0 rearranged.
    """
    a = [0] * (n * n)
    for i in S:
        for j in S:
            a[i * n + j] = 1 if i == j else -1
    return a, 1


def cor_vertex(R, n):
    """x_R x_R^T flattened row-major."""
    z = [int(i in R) for i in range(n)]
    return [z[i] * z[j] for i in range(n) for j in range(n)]


def cor_slack(n):
    """Rows indexed by S, columns by R, both as bitmasks over {1..n}."""
    if not 1 <= n <= 4:
        raise InputError("cor_slack needs 1 <= n <= 4")
    faces = [cor_face(_members(m, n), n) for m in range(1 << n)]
    verts = [cor_vertex(_members(m, n), n) for m in range(1 << n)]
    return SlackMatrix.build(faces, verts)


def mu_matrix(n):
    """1 exactly when |S & R| != 1."""
    idx = np.arange(1 << n)
    inter = np.vectorize(lambda v: bin(v).count("1"))(idx[:, None] & idx[None, :])
    return FunctionMatrix((inter != 1).astype(np.int8))


# ---------------------------------------------------------------- covers and protocols

class FaceVertexProtocol:
    """Nondeterministic protocol from a 1-cover of a support matrix.

    The prover names a rectangle; Alice checks her row is in it and Bob
    checks his column is.  The proof costs ceil(log2 t) bits.
    """

    def __init__(self, support, cover):
        if not cover or not verify_cover(support, cover, 1):
            raise InputError("not a valid 1-cover of the support")
        self.support = support
        self.cover = list(cover)
        t = len(self.cover)
        self.cost = math.ceil(math.log2(t)) if t > 1 else 0

    def run(self, row, col, witness):
        tr = Transcript()
        tr.send("P", bitstr([(witness >> (self.cost - 1 - b)) & 1 for b in range(self.cost)]))
        if witness >= len(self.cover):
            return ProtocolOutcome(0, tr)
        r = self.cover[witness]
        return ProtocolOutcome(int(row in r.sides[0] and col in r.sides[1]), tr)

    def accepts(self, row, col):
        return any(self.run(row, col, w).output for w in range(1 << self.cost))

    def check_all(self):
        rows, cols = self.support.dims
        return all(self.accepts(r, c) == (self.support[r, c] == 1)
                   for r in range(rows) for c in range(cols))


def fv_protocol_from_cover(support, cover):
    return FaceVertexProtocol(support, cover)


def factorization_to_cover(T, U):
    """Rectangle j = rows where T[:, j] > 0 times columns where U[j, :] > 0."""
    T = [[Fraction(v) for v in row] for row in T]
    U = [[Fraction(v) for v in row] for row in U]
    if any(v < 0 for row in T + U for v in row):
        raise InputError("factors must be nonnegative")
    inner = len(U)
    if any(len(row) != inner for row in T):
        raise InputError("factor shapes do not match")
    rects = []
    for j in range(inner):
        rows = {i for i, row in enumerate(T) if row[j] > 0}
        cols = {c for c, v in enumerate(U[j]) if v > 0}
        if rows and cols:
            rects.append(Rect((rows, cols)))
    return rects


def matmul(T, U):
    return [[sum((Fraction(a) * Fraction(b) for a, b in zip(row, col)), Fraction(0))
             for col in zip(*U)] for row in T]
