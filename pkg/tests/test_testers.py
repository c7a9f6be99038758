from fractions import Fraction
import itertools
import math

from hypothesis import given, settings, strategies as st
import pytest

from commlab.errors import InputError, ResourceError
from commlab.gf2hash import splitmix64_word
from commlab.protocols import Tape
from commlab.testers import (
    BoolFn, GadgetAB, RangedFn, all_boolean, all_gadget_pairs, all_ranged, blr_reject_probability,
    blr_test, blr_tester, blr_trials, distance_by_enumeration, distance_by_vertex_cover,
    distance_to_linear, distance_to_monotone, edge_test, edge_tester, gadget_h, hamming,
    is_monotone, monotone_tables, monotonize, parity_fn, run_tester,
    truncation_bounds, violation_slices,
)
from commlab.testers import tester_to_protocol as simulate_udisj  # keep pytest from collecting it


def fn(n, f):
    return BoolFn.from_function(n, lambda x: f(*[(x >> i) & 1 for i in range(n)]))


AND2 = fn(2, lambda a, b: a & b)
NOT_X1 = fn(2, lambda a, b: 1 - a)
NAND2 = fn(2, lambda a, b: 1 - (a & b))


def test_text_format():
    f = RangedFn.from_text("2 4\n0 1 3 2\n")
    assert f.table == (0, 1, 3, 2) and f.r == 4
    assert RangedFn.from_text(f.to_text()) == f
    assert isinstance(RangedFn.from_text("1 2\n1 0"), BoolFn)
    for bad in ("2 2\n0 1 1\n", "1 2\n0 2\n", "1 x\n0 1\n", "1\n"):
        with pytest.raises(InputError):
            RangedFn.from_text(bad)


def test_blr_accepts_linear_on_every_seed():
    f = fn(3, lambda a, b, c: a ^ c)
    for n in (2, 3, 4):
        for a in range(1 << n):
            for seed in range(20):
                assert blr_test(parity_fn(n, a), Fraction(1, 4), Tape(seed))[0]
    assert blr_test(f, Fraction(1, 10), Tape(1)) == (True, 120)


def test_blr_and_rejection_exact():
    bad = sum(1 for x in range(4) for y in range(4)
              if AND2(x ^ y) != AND2(x) ^ AND2(y))
    assert bad == 6
    assert blr_reject_probability(AND2) == Fraction(bad, 16)


def test_blr_single_trial_frequency():
    # one-trial tester against the exact rejection probability
    p = blr_reject_probability(AND2)
    tape = Tape(3)
    trials = 20000
    rej = sum(not run_tester(blr_tester(2, 1, tape), AND2)[0] for _ in range(trials))
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(rej / trials - p) < 3 * se


def test_blr_trials():
    assert blr_trials(Fraction(1, 8)) == 96
    with pytest.raises(InputError):
        blr_trials(0)


def test_distance_to_linear():
    assert distance_to_linear(AND2) == 1
    parity_complement = fn(2, lambda a, b: 1 ^ a ^ b)
    assert distance_to_linear(parity_complement) == 2
    assert max(distance_to_linear(f) for f in all_boolean(2)) == 2
    for a in range(8):
        assert distance_to_linear(parity_fn(3, a)) == 0


def test_blr_far_functions_rejected():
    # every non-linear f at n = 3 with eps set to its exact distance
    for f in itertools.islice((g for g in all_boolean(3) if distance_to_linear(g)), 0, None, 31):
        eps = Fraction(distance_to_linear(f), 8)
        rej = sum(not blr_test(f, eps, Tape(splitmix64_word(9, s)))[0] for s in range(100))
        assert rej >= 100 / 3


def test_violation_slices_examples():
    assert violation_slices(NOT_X1) == ((2, 0), Fraction(1, 2))
    assert violation_slices(AND2) == ((0, 0), 0)
    counts, p = violation_slices(NAND2)
    assert counts == (1, 1) and p == Fraction(2, 4)


def test_edge_frequency_matches_formula():
    _, p = violation_slices(NAND2)
    trials = 20000
    tape = Tape(17)
    rej = sum(not edge_test(NAND2, 1, tape) for _ in range(trials))
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(rej / trials - p) < 3 * se


def test_edge_test_one_sided():
    for f in all_boolean(3):
        if is_monotone(f):
            for seed in range(5):
                assert edge_test(f, 20, Tape(seed))


def test_edge_rejection_probability_exact_n3():
    # enumerate the tester's randomness: slice i and the n bits of x
    for f in all_boolean(3):
        hits = 0
        for i in range(3):
            for x in range(8):
                lo = x & ~(1 << i)
                hits += f(lo) > f(lo | 1 << i)
        assert Fraction(hits, 24) == violation_slices(f)[1]


def test_monotone_counts():
    assert [len(monotone_tables(n)) for n in range(6)] == [2, 3, 6, 20, 168, 7581]


def test_monotonize_examples():
    g, ch = monotonize(NOT_X1)
    assert is_monotone(g) and ch == 4 == 2 * sum(violation_slices(NOT_X1)[0])
    g, ch = monotonize(AND2)
    assert g == AND2 and ch == 0
    assert distance_to_monotone(NOT_X1) == 2


@pytest.mark.parametrize("n", [1, 2, 3])
def test_boolean_chain(n):
    for f in all_boolean(n):
        counts, _ = violation_slices(f)
        g, ch = monotonize(f)
        d = distance_by_vertex_cover(f)
        assert is_monotone(g) and hamming(f, g) <= ch <= 2 * sum(counts)
        assert d == distance_by_enumeration(f) <= ch


@settings(max_examples=60, deadline=None)
@given(st.integers(0, (1 << 16) - 1))
def test_boolean_chain_n4(code):
    f = BoolFn(4, [(code >> x) & 1 for x in range(16)])
    counts, _ = violation_slices(f)
    g, ch = monotonize(f)
    assert is_monotone(g)
    assert distance_by_vertex_cover(f) == distance_by_enumeration(f) <= ch <= 2 * sum(counts)


@pytest.mark.parametrize("n,r", [(1, 3), (1, 4), (2, 3), (2, 4), (3, 3)])
def test_ranged_chain(n, r):
    k = math.ceil(math.log2(r))
    for f in all_ranged(n, r):
        counts, _ = violation_slices(f)
        g, ch = monotonize(f)
        assert is_monotone(g) and ch <= 2 * k * sum(counts)
        assert distance_by_vertex_cover(f) == distance_by_enumeration(f) <= ch


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=16, max_size=16))
def test_ranged_monotonize_n4(vals):
    f = RangedFn(4, vals, 8)
    counts, _ = violation_slices(f)
    g, ch = monotonize(f)
    assert is_monotone(g) and distance_to_monotone(f) <= ch <= 2 * 3 * sum(counts)


def test_oracle_caps():
    with pytest.raises(ResourceError):
        distance_by_enumeration(RangedFn(4, [0] * 16, 3))
    with pytest.raises(ResourceError):
        monotone_tables(6)


def test_gadget_examples():
    h = gadget_h(GadgetAB(3, {1}, {2}))
    assert h(0) == 2
    # S = {1}: 2 - 1 + 1
    assert h(0b001) == 2
    with pytest.raises(InputError):
        GadgetAB(2, {3}, set())


def test_gadget_matches_formula():
    for A, B in itertools.islice(all_gadget_pairs(4, 1), 0, None, 7):
        g = GadgetAB(4, A, B)
        h = gadget_h(g)
        for S in range(16):
            Sset = {i + 1 for i in range(4) if S >> i & 1}
            assert h(S) == 2 * len(Sset) + (-1) ** len(Sset & A) + (-1) ** len(Sset & B)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gadget_dichotomy(n):
    pairs = list(all_gadget_pairs(n, 1))
    assert len(pairs) == n * 3 ** (n - 1)
    for A, B in all_gadget_pairs(n, 0):
        assert is_monotone(gadget_h(GadgetAB(n, A, B)))
    for A, B in pairs:
        h = gadget_h(GadgetAB(n, A, B))
        (i,) = A & B
        counts, _ = violation_slices(h)
        assert 8 * counts[i - 1] >= 1 << n
        assert 8 * distance_to_monotone(h) >= 1 << n


def test_truncation():
    assert truncation_bounds(16, 3) == (4, 28)
    assert truncation_bounds(4, 1) == (2, 6)
    g = GadgetAB(16, {1, 2, 3}, {3, 9})
    h, ht = gadget_h(g), gadget_h(g, truncate=3)
    diff = sum(a != b for a, b in zip(h.table, ht.table))
    assert 16 * diff <= 1 << 16
    assert min(ht.table) >= 4 and max(ht.table) <= 28
    # truncation keeps monotone gadgets monotone
    for A, B in itertools.islice(all_gadget_pairs(4, 0), 0, None, 5):
        assert is_monotone(gadget_h(GadgetAB(4, A, B), truncate=1))


def edge24(n, tape):
    return edge_tester(n, 24 * n, tape)


def test_tester_to_protocol_disjoint():
    for s in range(20):
        out = simulate_udisj(edge24, {1, 4}, {2, 8}, Tape(s), n=8)
        assert out.output == 1
        assert out.transcript.total == 2 * 2 * 24 * 8
        assert out.alice_bits == out.bob_bits


def test_tester_to_protocol_intersecting():
    wrong = 0
    for s in range(100):
        out = simulate_udisj(edge24, {1, 3, 5}, {3, 8}, Tape(splitmix64_word(1, s)), n=8)
        wrong += out.output != 0
        assert out.transcript.total % 2 == 0
    assert wrong <= 33


def test_protocol_matches_direct_run():
    # the simulation sees exactly what a tester run on h_AB sees
    A, B = {2, 3}, {3, 5}
    for s in range(10):
        out = simulate_udisj(edge24, A, B, Tape(s), n=6)
        accept, queries = run_tester(edge24(6, Tape(s)), gadget_h(GadgetAB(6, A, B)))
        assert out.output == int(accept) and out.transcript.total == 2 * queries
