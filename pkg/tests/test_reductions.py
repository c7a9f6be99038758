from fractions import Fraction
import itertools
import math

import numpy as np
import pytest

from commlab.errors import ConstructionFailure, DecodeError, InputError
from commlab.protocols import Tape, all_inputs, as_bits
from commlab.reductions import (
    Codebook, WelfareInstance, all_sparse_codebook,
    amplified_runs, build_codebook, cs_decode, cs_decode_amplified, cs_encode,
    cs_round_trip, default_alpha, disj, disj_via_exact_fk, disj_via_finfty,
    gh_agreement_exact, gh_balanced_probability, gh_via_f0, index_to_disj,
    index_to_gh, intersecting_bound, intersecting_family, is_intersecting,
    matvec, mdisj_to_welfare, pad_gh, random_01_matrix, toy_sensing, top_k,
    valuation_checks,
)
from commlab.sketches import F0Sketch


def hamming(x, y):
    return int(np.count_nonzero(as_bits(x) != as_bits(y)))


def test_index_to_disj():
    x, y = index_to_disj("101", 2)
    assert list(y) == [0, 1, 0] and disj(x, y) == 1
    x, y = index_to_disj("101", 3)
    assert list(y) == [0, 0, 1] and disj(x, y) == 0
    for n in range(1, 5):
        for x in all_inputs(n):
            for i in range(1, n + 1):
                assert disj(*index_to_disj(x, i)) == 1 - x[i - 1]


@pytest.mark.parametrize("n", [1, 3, 5])
def test_index_to_gh_exact_split(n):
    p = gh_balanced_probability(n)
    for x in all_inputs(n):
        for i in range(1, n + 1):
            agree = gh_agreement_exact(x, i)
            # x_i = 1 pushes a and b together, x_i = 0 pushes them apart
            want = Fraction(1, 2) + (p / 2 if x[i - 1] else -p / 2)
            assert agree == want


def test_gh_balanced_probability():
    assert gh_balanced_probability(3) == Fraction(1, 2)
    with pytest.raises(InputError):
        index_to_gh("10", 1, 1, Tape(0))


def test_index_to_gh_monte_carlo():
    n, q = 9, 64
    m = q * n
    good = 0
    for trial in range(200):
        rng = np.random.default_rng(trial)
        x = rng.integers(0, 2, n)
        i = int(rng.integers(1, n + 1))
        xs, ys = index_to_gh(x, i, q, Tape(trial))
        frac = hamming(xs, ys) / m
        margin = 1 / math.sqrt(m)
        if (x[i - 1] == 1 and frac <= 0.5 - margin) or (x[i - 1] == 0 and frac >= 0.5 + margin):
            good += 1
    assert good >= 200 * 8 / 9


def test_gh_via_f0():
    assert gh_via_f0("110", "011") == 2
    for n in range(1, 5):
        for x in all_inputs(n):
            assert gh_via_f0(x, x) == 0
            for y in all_inputs(n):
                assert gh_via_f0(x, y) == hamming(x, y)
    # sketch-based estimate: with k' above F0 the estimate is exact
    est = lambda items: F0Sketch.create(16, 16, seed=3).extend(items).estimate()
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y = rng.integers(0, 2, 16), rng.integers(0, 2, 16)
        assert gh_via_f0(x, y, est) == hamming(x, y)


def test_gh_via_f0_error_scales():
    x, y = "1100", "0110"
    f0 = 3
    for eps in (Fraction(1, 10), Fraction(1, 2)):
        for sign in (1, -1):
            out = gh_via_f0(x, y, lambda items: f0 * (1 + sign * eps))
            assert abs(out - hamming(x, y)) <= 2 * eps * f0


def test_disj_via_finfty():
    assert disj_via_finfty("10", "01") == 1
    assert disj_via_finfty("10", "10") == 0
    for n in range(1, 5):
        for x in all_inputs(n):
            for y in all_inputs(n):
                want = disj(x, y)
                assert disj_via_finfty(x, y) == want
                for seed in range(3):
                    assert disj_via_finfty(x, y, "approx", seed) == want


def test_disj_via_exact_fk():
    for k in (0, 2, 3):
        for x in all_inputs(3):
            for y in all_inputs(3):
                bit, c, extra = disj_via_exact_fk(x, y, k)
                assert c == sum(a & b for a, b in zip(x, y))
                assert bit == disj(x, y) and extra == 2
    with pytest.raises(InputError):
        disj_via_exact_fk("1", "1", 1)


def test_pad_gh():
    x, y = pad_gh("1010", "0110", 8)
    assert len(x) == 8 and hamming(x, y) == 2
    for m in range(1, 4):
        for n in range(m, 7):
            for x in all_inputs(m):
                for y in all_inputs(m):
                    xp, yp = pad_gh(x, y, n)
                    assert gh_via_f0(xp, yp) == gh_via_f0(x, y)
    with pytest.raises(InputError):
        pad_gh("101", "011", 2)


def test_codebook_construction():
    cb = build_codebook(8, 2, 8, seed=1)
    assert len(cb) == 8
    cb = build_codebook(16, 8, 16, seed=2)
    for a, b in itertools.combinations(cb.vectors, 2):
        assert hamming(a, b) >= 1
    with pytest.raises(ConstructionFailure):
        build_codebook(4, 2, 8, seed=0, budget=1000)
    with pytest.raises(InputError):
        Codebook(4, 2, [[1, 1, 0, 0]] * 2)


def test_toy_sensing():
    vecs = [v for v in itertools.product((0, 1), repeat=4) if sum(v) == 2]
    seed = next(s for s in range(100) if toy_sensing(vecs, s).injective())
    ts = toy_sensing(vecs, seed)
    assert ts.m == 8
    for v in vecs:
        assert tuple(ts.recover(ts.measure(v))) == v
    single = toy_sensing([[1, 0]], 0)
    assert single.m == 3
    with pytest.raises(DecodeError):
        ts.recover([99] * 8)


def test_toy_sensing_collision_rate():
    cb = all_sparse_codebook(8, 2)
    bad = sum(not toy_sensing(cb, seed).injective() for seed in range(100))
    assert bad <= 25


def test_cs_encode():
    x = np.array([0, 1, 1, 0])
    assert cs_encode([x], 2) == [0, 2, 2, 0]
    cb = all_sparse_codebook(8, 2)
    y = cs_encode([cb.vectors[0], cb.vectors[5]], 200)
    assert sum(abs(v) for v in y) == 2 * (200 + 40000)
    # the lower blocks are tiny next to the top one
    B, k = 3, 2
    alpha = default_alpha(1)
    blocks = [cb.vectors[i] for i in (1, 2, 3)]
    y = cs_encode(blocks, alpha)
    top = [alpha ** B * int(t) for t in blocks[-1]]
    assert sum(abs(a - b) for a, b in zip(y, top)) <= Fraction(1, 100) * k * alpha ** B


def test_top_k():
    assert top_k([1, -5, 3, 5], 2) == [0, -5, 0, 5]


def test_cs_round_trip_all_pairs():
    cb = all_sparse_codebook(8, 2)
    for a in range(len(cb)):
        for b in range(len(cb)):
            found, steps = cs_round_trip([cb.vectors[a], cb.vectors[b]], cb, seed=17 * a + b)
            assert [cb.index(v) for v in found] == [a, b]
            for s in steps:
                assert s.best <= s.close_bound and s.runner_up >= s.far_bound


def test_cs_exact_oracle_single_block():
    cb = all_sparse_codebook(8, 2)
    for i in range(len(cb)):
        found, steps = cs_round_trip([cb.vectors[i]], cb, seed=i, oracle="exact")
        assert cb.index(found[0]) == i and steps[0].best == 0


def test_cs_margin_violation_detected():
    cb = all_sparse_codebook(8, 2)
    A = random_01_matrix(24, 8, 5).tolist()
    y = cs_encode([cb.vectors[0], cb.vectors[1]], 200)

    def liar(b):
        return [0] * 8
    with pytest.raises(DecodeError):
        cs_decode(matvec(A, y), A, liar, cb, 200, 2)


def test_cs_amplified():
    cb = all_sparse_codebook(8, 2)
    assert amplified_runs(8) == 5
    blocks = [cb.vectors[3], cb.vectors[9]]
    found, failures = cs_decode_amplified(blocks, cb, seed=4)
    assert [cb.index(v) for v in found] == [3, 9]


def test_intersecting_family():
    assert len(intersecting_family(5, 2, 1, seed=0)) == 1
    assert intersecting_bound(16, 2, 3) == pytest.approx(36 * math.exp(-4))
    fam = intersecting_family(16, 2, 3, seed=7, budget=100)
    assert is_intersecting(fam, 2)
    with pytest.raises(ConstructionFailure):
        intersecting_family(2, 2, 3, seed=0, budget=50)


def test_welfare_dichotomy():
    fam = intersecting_family(6, 2, 3, seed=11)
    t = len(fam)
    for S1 in range(1, 1 << t):
        for S2 in range(1, 1 << t):
            a = [j for j in range(t) if S1 >> j & 1]
            b = [j for j in range(t) if S2 >> j & 1]
            common = set(a) & set(b)
            plain = mdisj_to_welfare([a, b], fam).optimal_welfare()
            shifted = mdisj_to_welfare([a, b], fam, subadditive=True).optimal_welfare()
            if not common:
                assert plain == 1 and shifted == 3
            elif len(common) == 1:
                assert plain == 2 and shifted == 4


def test_welfare_valuations():
    fam = intersecting_family(6, 2, 2, seed=3)
    inst = mdisj_to_welfare([[0], [1]], fam, subadditive=True)
    assert valuation_checks(inst) == (True, True)
    plain = mdisj_to_welfare([[0], [1]], fam)
    assert valuation_checks(plain)[0]


def test_welfare_json_round_trip():
    fam = intersecting_family(6, 2, 2, seed=3)
    inst = mdisj_to_welfare([[0], [0, 1]], fam, subadditive=True)
    back = WelfareInstance.from_json(inst.to_json())
    assert back.to_json() == inst.to_json()
    assert back.optimal_welfare() == inst.optimal_welfare()
    with pytest.raises(InputError):
        WelfareInstance(2, 3, [[0, 0, 0], [1, 1, 1]], [[0], [1]])
