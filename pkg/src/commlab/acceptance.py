"""The sixteen acceptance criteria as runnable checks.

Each check returns (passed, detail).  `run_criteria` times them against
their budgets; a check that passes but overruns its budget is reported
as a failure.  `quick=True` trims trial counts and enumeration sizes for
smoke runs; the full settings are the ones the criteria are stated for.
"""
from dataclasses import dataclass
from fractions import Fraction
import itertools
import math
import time

import numpy as np

from . import analyzer as an
from . import ann
from . import polytopes as pt
from . import protocols as pr
from . import reductions as rd
from . import sketches as sk
from . import testers as ts
from .gf2hash import FieldSpec, KWisePoly, SignHash, SplitMix64, splitmix64_word


@dataclass
class Criterion:
    number: int
    title: str
    budget: float
    check: object


@dataclass
class Result:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return (f"criterion {self.number:2d} {mark}  {self.title}: {self.detail} "
                f"[{self.seconds:.1f}s / {self.budget:.0f}s]")


def _popcount(v):
    return bin(v).count("1")


# ---------------------------------------------------------------- lecture 1

def c1_f2_exact(quick=False):
    spec = FieldSpec.of_width(2)
    signs = np.array([SignHash(KWisePoly(spec, c)).table()
                      for c in itertools.product(range(4), repeat=4)], dtype=np.int64)
    rows = []
    for m in range(0, 5 if quick else 7):
        for items in itertools.product(range(4), repeat=m):
            f = [0] * 4
            for j in items:
                f[j] += 1
            rows.append(f)
    F = np.array(rows, dtype=np.int64)
    Z = F @ signs.T
    f2 = (F * F).sum(axis=1)
    ex_num = (Z ** 2).sum(axis=1)
    ex2_num = (Z ** 4).sum(axis=1)
    H = len(signs)
    bad_mean = sum(Fraction(int(a), H) != int(b) for a, b in zip(ex_num, f2))
    bad_var = sum(Fraction(int(a), H) > 3 * int(b) ** 2 for a, b in zip(ex2_num, f2))
    # cross-check a slice through the sketch object itself
    for items in [(1, 1, 2), (1, 2, 3, 4, 4, 4)]:
        xs = [sk.F2Sketch(4, [SignHash(KWisePoly(spec, c))]).extend(items).estimate()
              for c in itertools.product(range(4), repeat=4)]
        if sum(xs) / H != sk.Stream(4, items).moment(2):
            bad_mean += 1
    return bad_mean == 0 and bad_var == 0, \
        f"{len(rows)} streams x {H} hashes, mean mismatches {bad_mean}, E[X^2] > 3F2^2 in {bad_var}"


def c2_f2_chebyshev(quick=False):
    eps, t = Fraction(1, 2), 40
    trials = 200 if quick else 1000
    rng = SplitMix64(2024)
    items = [1 + rng.randbelow(16) for _ in range(64)]
    f2 = sk.Stream(16, items).moment(2)
    bad = 0
    for trial in range(trials):
        y = sk.F2Sketch.create(16, t, seed=splitmix64_word(77, trial)).extend(items).estimate()
        bad += abs(y - f2) > eps * f2
    rate = Fraction(bad, trials)
    return rate <= Fraction(1, 4), f"failure rate {bad}/{trials} (F2 = {f2})"


def c16_adapter(quick=False):
    runs = 30 if quick else 100
    mismatches = 0
    for s in range(runs):
        rng = SplitMix64(splitmix64_word(16, s))
        n = 16
        items = [1 + rng.randbelow(n) for _ in range(1 + rng.randbelow(60))]
        cut = rng.randbelow(len(items) + 1)
        seed = rng.next_u64()
        for make in (lambda: sk.F2Sketch.create(n, 9, groups=3, seed=seed),
                     lambda: sk.FInfSketch.create(n)):
            mono = make().extend(items)
            first = make().extend(items[:cut])
            resumed = sk.restore(first.to_bytes()).extend(items[cut:])
            mismatches += resumed.to_bytes() != mono.to_bytes()
    wrong = 0
    total = 0
    for n in range(1, 5):
        for x in pr.all_inputs(n):
            for y in pr.all_inputs(n):
                truth = rd.disj(x, y)
                wrong += rd.disj_via_finfty(x, y) != truth
                out = pr.streaming_to_oneway(lambda: sk.FInfSketch(n), x, y,
                                             lambda e: e <= Fraction(4, 3))
                wrong += out.output != truth
                total += 1
    return mismatches == 0 and wrong == 0, \
        f"{runs} split runs, {mismatches} byte mismatches; DISJ via F-inf wrong on {wrong}/{total}"


# ---------------------------------------------------------------- lecture 3

def c3_equality(quick=False):
    bad = 0
    checked = 0
    for n in range(1, 4):
        xs = pr.all_inputs(n)
        for x in xs:
            for y in xs:
                want = 0 if x == y else Fraction(1, 4)
                bad += pr.equality_error_exact(x, y, 1) != want
                checked += 1
    for n, reps in ((1, 2), (1, 3), (2, 2)):
        xs = pr.all_inputs(n)
        for x in xs:
            for y in xs:
                want = 0 if x == y else Fraction(1, 4 ** reps)
                bad += pr.equality_error_exact(x, y, reps) != want
                checked += 1
    return bad == 0, f"{checked} pairs enumerated over all tapes, {bad} mismatches"


def c8_cs(quick=False):
    cb = rd.all_sparse_codebook(8, 2)
    alpha = rd.default_alpha()
    pairs = [(a, (5 * a + b) % len(cb)) for a in range(len(cb)) for b in range(0, 16, 4 if quick else 2)]
    lost = margin = 0
    for a, b in pairs:
        try:
            found, steps = rd.cs_round_trip([cb.vectors[a], cb.vectors[b]], cb, alpha,
                                            seed=31 * a + b)
        except rd.DecodeError:
            lost += 1
            continue
        lost += [cb.index(v) for v in found] != [a, b]
        margin += sum(not (s.best <= s.close_bound and s.runner_up >= s.far_bound) for s in steps)
    vecs = [v for v in itertools.product((0, 1), repeat=4) if sum(v) == 2]
    seed = next(s for s in range(1000) if rd.toy_sensing(vecs, s).injective())
    toy = rd.toy_sensing(vecs, seed)
    toy_ok = toy.m == 8 and all(tuple(toy.recover(toy.measure(v))) == v for v in vecs)
    return lost == 0 and margin == 0 and toy_ok, \
        f"{len(pairs)} two-block round trips, {lost} lost, {margin} margin violations; " \
        f"toy sensing m={toy.m} seed={seed} recovers all: {toy_ok}"


# ---------------------------------------------------------------- lecture 4

def c5_analyzer(quick=False):
    notes = []
    ok = an.det_cc(an.eq_matrix(2)) == 3 and an.det_cc(an.disj_matrix(1)) == 2
    notes.append(f"det_cc EQ2/DISJ1 ok: {ok}")
    for n in range(1, 4):
        size, _ = an.min_cover(an.eq_matrix(n), 1)
        ok &= size == 1 << n
        eq_fool = an.FoolingSet(tuple((x, x) for x in range(1 << n)), 1)
        full = (1 << n) - 1
        disj_fool = an.FoolingSet(tuple((x, full ^ x) for x in range(1 << n)), 1)
        ok &= an.verify_fooling_set(an.eq_matrix(n), eq_fool)
        ok &= an.verify_fooling_set(an.disj_matrix(n), disj_fool)
    notes.append("covers 2^n and both fooling sets verified for n <= 3" if ok else "mismatch")
    return bool(ok), "; ".join(notes)


def c6_mdisj(quick=False):
    bad = []
    for k in (2, 3):
        for n in (1, 2, 3):
            M = an.mdisj_matrix(k, n)
            if M.count(1) != (k + 1) ** n:
                bad.append(f"count k={k} n={n}")
            best, _ = an.max_box_ones(M)
            if best > k ** n:
                bad.append(f"box k={k} n={n}: {best}")
    for n in (1, 2, 3):
        best, _ = an.max_box_ones(an.udisj_matrix(n))
        if best != 1 << n:
            bad.append(f"udisj n={n}: {best}")
    return not bad, "all counts and box maxima match" if not bad else ", ".join(bad)


def _cis_cases(n):
    all_edges = list(itertools.combinations(range(n), 2))
    for g in range(1 << len(all_edges)):
        adj = [0] * n
        for b, (u, v) in enumerate(all_edges):
            if g >> b & 1:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
        cliques, indeps = [], []
        for S in range(1 << n):
            members = [v for v in range(n) if S >> v & 1]
            inside = [adj[v] & S & ~(1 << v) for v in members]
            if all(m == S & ~(1 << v) for m, v in zip(inside, members)):
                cliques.append(S)
            if not any(inside):
                indeps.append(S)
        yield adj, cliques, indeps


def c7_cis(quick=False):
    count = wrong = over = 0
    worst = 0
    for n in range(1, 6 if quick else 7):
        bound = pr.cis_bit_bound(n)
        for adj, cliques, indeps in _cis_cases(n):
            for C in cliques:
                for I in indeps:
                    out, events = pr.cis_core(n, adj, C, I)
                    bits = sum(len(b) for _, b in events)
                    count += 1
                    wrong += out != int(not C & I)
                    over += bits > bound
                    worst = max(worst, bits)
    return wrong == 0 and over == 0, \
        f"{count} instances, {wrong} wrong, {over} over the bit bound (max {worst} bits)"


# ---------------------------------------------------------------- lecture 5

def c10_permutahedron(quick=False):
    counts = all(len(pt.permutahedron_ef(n).rows) == n * n + 3 * n for n in range(2, 6))
    bad = 0
    runs = 0
    rng = SplitMix64(10)
    for n in (3, 4):
        sys = pt.permutahedron_ef(n)
        for _ in range(8 if quick else 20):
            c = [rng.randbelow(21) - 10 for _ in range(n)]
            value, x, _ = pt.lp_optimize(sys, c)
            bad += value != pt.brute_max(c) or sorted(x) != list(range(1, n + 1))
            runs += 1
    return counts and bad == 0, f"row counts n^2+3n: {counts}; {runs} LPs, {bad} disagree with brute force"


def c11_correlation(quick=False):
    notes = []
    ok = True
    for n in (1, 2, 3):
        S = pt.cor_slack(n)
        formula = all(S.entries[a][b] == (_popcount(a & b) - 1) ** 2
                      for a in range(1 << n) for b in range(1 << n))
        M = pt.mu_matrix(n)
        size, cover = an.min_cover(M, 1)
        proto = pt.fv_protocol_from_cover(M, cover)
        good = formula and S.support() == M and size >= math.ceil(Fraction(3, 2) ** n) \
            and proto.check_all()
        ok &= good
        notes.append(f"n={n} cover {size} >= {math.ceil(Fraction(3, 2) ** n)}")
    return ok, "; ".join(notes)


# ---------------------------------------------------------------- lecture 6

def c4_gap(quick=False):
    bad = checked = 0
    for L in range(1, 5):
        p = Fraction(1, 2 * L)
        for d in range(1, 7):
            for delta in range(0, min(d, 4) + 1):
                x = [0] * d
                y = [1] * delta + [0] * (d - delta)
                want = Fraction(1, 2) * (1 - (1 - Fraction(1, L)) ** delta)
                bad += pr.disagreement_exact(x, y, p) != want
                checked += 1
    return bad == 0, f"{checked} (L, d, delta) cases, {bad} mismatches"


def _planted(seed, near_dist, far_min, d=64, n=32, with_near=True):
    rng = np.random.default_rng(seed)
    q = rng.integers(0, 2, d).astype(np.uint8)
    pts = []
    while len(pts) < n - int(with_near):
        p = rng.integers(0, 2, d).astype(np.uint8)
        if np.count_nonzero(p != q) >= far_min:
            pts.append(p)
    near = None
    if with_near:
        p = q.copy()
        p[rng.choice(d, near_dist, replace=False)] ^= 1
        near = int(rng.integers(0, n))
        pts.insert(near, p)
    return q, pts, near


def c9_ann(quick=False):
    trials = 40 if quick else 200
    eps, delta = 1, Fraction(1, 10)
    L = 8
    good = lookups_ok = 0
    for t in range(trials):
        # even trials plant a point at distance L, odd ones keep everything beyond (1+eps)L
        q, pts, near = _planted(t, L, 2 * L + 1, with_near=t % 2 == 0)
        table = ann.build_decision(pts, L, eps, delta, seed=splitmix64_word(9, t))
        good += ann.query_decision(table, q) == near
        lookups_ok += table.lookups == 1
    full_good = full_lookups = 0
    budget = ann.probe_budget(64)
    for t in range(trials):
        q, pts, _ = _planted(10_000 + t, 5, 12)
        idx = ann.AnnIndex(pts, eps, delta, seed=splitmix64_word(19, t))
        pid, _ = ann.query_full(idx, q, seed=t)
        nearest = min(idx.distance(i, q) for i in range(idx.n))
        full_good += idx.distance(pid, q) <= (1 + eps) * nearest
        full_lookups += idx.lookups <= budget
    ok = 10 * good >= 9 * trials and lookups_ok == trials \
        and 10 * full_good >= 9 * trials and full_lookups == trials
    return ok, f"decision {good}/{trials} (1 lookup each: {lookups_ok == trials}); " \
        f"full {full_good}/{trials} within (1+eps), lookup budget {budget} kept in {full_lookups}"


# ---------------------------------------------------------------- lecture 7

def c15_welfare(quick=False):
    notes = []
    ok = True
    fam = rd.intersecting_family(10, 2, 3, seed=5)
    ok &= rd.is_intersecting(fam, 2)
    t = len(fam)
    cases = 0
    for S1 in range(1, 1 << t):
        for S2 in range(1, 1 << t):
            common = _popcount(S1 & S2)
            if common > 1:
                continue
            a = [j for j in range(t) if S1 >> j & 1]
            b = [j for j in range(t) if S2 >> j & 1]
            plain = rd.mdisj_to_welfare([a, b], fam).optimal_welfare()
            shifted = rd.mdisj_to_welfare([a, b], fam, subadditive=True).optimal_welfare()
            want = (1, 3) if common == 0 else (2, 4)
            ok &= (plain, shifted) == want
            cases += 1
    notes.append(f"{cases} input pairs on m=10")
    small = rd.intersecting_family(6, 2, 3, seed=3)
    for a, b in (([0], [1]), ([0, 1], [1, 2]), ([2], [2])):
        mono, sub = rd.valuation_checks(rd.mdisj_to_welfare([a, b], small, subadditive=True))
        ok &= mono and sub
    notes.append("shifted valuations monotone and subadditive at m=6")
    return bool(ok), "; ".join(notes)


# ---------------------------------------------------------------- lecture 8

def c12_blr(quick=False):
    runs = 100 if quick else 500
    linear_ok = all(ts.blr_test(ts.parity_fn(3, a), Fraction(1, 4), pr.Tape(s))[0]
                    for a in range(8) for s in range(50))
    AND = ts.BoolFn.from_function(2, lambda x: (x & 1) & (x >> 1))
    count = sum(1 for x in range(4) for y in range(4) if AND(x ^ y) != AND(x) ^ AND(y))
    and_ok = ts.blr_reject_probability(AND) == Fraction(count, 16)
    worst = Fraction(1)
    for f in ts.all_boolean(3):
        d = ts.distance_to_linear(f)
        if not d:
            continue
        eps = Fraction(d, 8)
        rej = sum(not ts.blr_test(f, eps, pr.Tape(splitmix64_word(12, s)))[0] for s in range(runs))
        worst = min(worst, Fraction(rej, runs))
    ok = linear_ok and and_ok and worst >= Fraction(1, 3)
    return ok, f"linear always accepted: {linear_ok}; AND rejection {Fraction(count, 16)}; " \
        f"worst far-function rejection rate {float(worst):.3f}"


def c13_monotone(quick=False):
    bad = 0
    for f in ts.all_boolean(3):
        counts, prob = ts.violation_slices(f)
        g, changes = ts.monotonize(f)
        bad += not ts.is_monotone(g) or changes > 2 * sum(counts)
        bad += ts.distance_by_enumeration(f) > changes
        hits = sum(f(x & ~(1 << i)) > f(x | 1 << i) for i in range(3) for x in range(8))
        bad += Fraction(hits, 24) != prob
    ranged = 0
    cases = [(1, 3), (1, 4), (2, 3), (2, 4), (3, 3)] + ([] if quick else [(3, 4)])
    for n, r in cases:
        k = math.ceil(math.log2(r))
        for f in ts.all_ranged(n, r):
            counts, _ = ts.violation_slices(f)
            g, changes = ts.monotonize(f)
            bad += not ts.is_monotone(g) or changes > 2 * k * sum(counts)
            ranged += 1
    return bad == 0, f"256 Boolean functions and {ranged} ranged functions, {bad} failures"


def c14_gadget(quick=False):
    bad = 0
    for n in range(1, 5):
        for A, B in ts.all_gadget_pairs(n, 0):
            bad += not ts.is_monotone(ts.gadget_h(ts.GadgetAB(n, A, B)))
        for A, B in ts.all_gadget_pairs(n, 1):
            h = ts.gadget_h(ts.GadgetAB(n, A, B))
            bad += 8 * ts.distance_to_monotone(h) < 1 << n
    runs = 100 if quick else 500
    n = 8
    wrong = comm_bad = 0
    for s in range(runs):
        rng = SplitMix64(splitmix64_word(14, s))
        # elements go to A only, B only, or neither; one shared element on odd runs
        A, B = set(), set()
        for i in range(1, n + 1):
            r = rng.randbelow(3)
            (A if r == 0 else B if r == 1 else set()).add(i)
        if s % 2:
            i = 1 + rng.randbelow(n)
            A.add(i)
            B.add(i)
        out = ts.tester_to_protocol(lambda m, tape: ts.edge_tester(m, 24 * m, tape),
                                    A, B, pr.Tape(rng.next_u64()), n=n)
        wrong += out.output != int(not A & B)
        queries = sum(1 for w, _ in out.transcript.events if w == "A")
        comm_bad += out.transcript.total != 2 * queries
    ok = bad == 0 and 3 * wrong <= runs and comm_bad == 0
    return ok, f"exhaustive n<=4 failures {bad}; UDISJ n=8 error {wrong}/{runs}; " \
        f"communication = 2 x queries on every run: {comm_bad == 0}"


CRITERIA = [
    Criterion(1, "exact F2 unbiasedness", 5, c1_f2_exact),
    Criterion(2, "F2 Chebyshev guarantee", 30, c2_f2_chebyshev),
    Criterion(3, "equality protocol error", 5, c3_equality),
    Criterion(4, "biased inner product disagreement", 10, c4_gap),
    Criterion(5, "analyzer oracles", 60, c5_analyzer),
    Criterion(6, "MDISJ counting", 60, c6_mdisj),
    Criterion(7, "clique vs independent set", 60, c7_cis),
    Criterion(8, "compressed sensing decode", 10, c8_cs),
    Criterion(9, "approximate nearest neighbour", 60, c9_ann),
    Criterion(10, "permutahedron extended formulation", 30, c10_permutahedron),
    Criterion(11, "correlation polytope slack", 60, c11_correlation),
    Criterion(12, "BLR linearity test", 60, c12_blr),
    Criterion(13, "monotonicity chain", 120, c13_monotone),
    Criterion(14, "gadget dichotomy and UDISJ simulation", 120, c14_gadget),
    Criterion(15, "welfare reduction", 60, c15_welfare),
    Criterion(16, "streaming to one-way adapter", 30, c16_adapter),
]

SUITES = {
    "lecture1": [1, 2, 16],
    "lecture3": [3, 8],
    "lecture4": [5, 7],
    "lecture5": [10, 11],
    "lecture6": [4, 9],
    "lecture7": [6, 15],
    "lecture8": [12, 13, 14],
    "all": list(range(1, 17)),
}


def by_number(number):
    for c in CRITERIA:
        if c.number == number:
            return c
    raise KeyError(number)


def run_criterion(c, quick=False):
    start = time.perf_counter()
    try:
        passed, detail = c.check(quick)
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    seconds = time.perf_counter() - start
    if passed and seconds > c.budget:
        passed = False
        detail += f"; over budget ({seconds:.1f}s > {c.budget}s)"
    return Result(c.number, c.title, bool(passed), detail, seconds, c.budget)


def run_criteria(numbers, quick=False):
    return [run_criterion(by_number(k), quick) for k in numbers]
