from fractions import Fraction
import itertools

import numpy as np
import pytest

from commlab.ann import (
    AnnIndex, build_decision, epsdisj_l2_gadget, l1_to_hamming, probe_budget,
    query_decision, query_full,
)
from commlab.errors import InputError, ResourceError
from commlab.protocols import GapParams


def planted(seed, near_dist, far_min, d=64, n=32, with_near=True):
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


def test_single_point_found():
    p = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
    tab = build_decision([p], 2, 1, Fraction(1, 10), seed=3)
    assert query_decision(tab, p) == 0 and tab.lookups == 1


def test_threshold_scale():
    assert GapParams.make(2, 1, Fraction(1, 10)).t == Fraction(3, 8)


def test_materialized_matches_lazy():
    rng = np.random.default_rng(0)
    pts = rng.integers(0, 2, (5, 16))
    mat = build_decision(pts, 2, 1, Fraction(1, 10), seed=9, s=12, materialize=True)
    lazy = build_decision(pts, 2, 1, Fraction(1, 10), seed=9, s=12)
    assert mat.threshold <= 8
    for key, pid in mat.buckets.items():
        assert mat.bucket_ok(key, pid)
    for code in range(1 << 12):
        bits = np.array([(code >> i) & 1 for i in range(12)], dtype=np.uint8)
        key = np.packbits(bits, bitorder="little").tobytes()
        assert mat.lookup(key) == lazy.lookup(key)


def test_materialized_caps():
    pts = np.zeros((2, 16), dtype=np.uint8)
    with pytest.raises(ResourceError):
        build_decision(pts, 2, 1, Fraction(1, 10), seed=1, materialize=True)
    with pytest.raises(ResourceError):
        build_decision(pts, 2, 1, Fraction(1, 10), seed=1, s=30, materialize=True)


def test_decision_planted():
    ok = 0
    for trial in range(60):
        q, pts, near = planted(trial, 8, 16, with_near=trial % 2 == 0)
        tab = build_decision(pts, 8, 1, Fraction(1, 10), seed=500 + trial)
        ok += query_decision(tab, q) == near
        assert tab.lookups == 1
    assert ok >= 54


def test_full_query_membership():
    rng = np.random.default_rng(4)
    pts = rng.integers(0, 2, (6, 16))
    idx = AnnIndex(pts, 1, Fraction(1, 10), seed=2)
    pid, L = query_full(idx, pts[3])
    assert L == 0 and idx.distance(pid, pts[3]) == 0 and idx.lookups == 1


def test_full_query_planted():
    ok = 0
    for trial in range(30):
        q, pts, near = planted(trial, 5, 12)
        idx = AnnIndex(pts, 1, Fraction(1, 10), seed=trial)
        pid, L = query_full(idx, q, seed=trial)
        ok += idx.distance(pid, q) <= 10
        assert idx.lookups <= probe_budget(64)
    assert ok >= 27


def test_majority_variant_counts_every_read():
    q, pts, near = planted(1, 5, 12, d=16, n=4)
    idx = AnnIndex(pts, 1, Fraction(1, 10), seed=1, replicas=3)
    query_full(idx, q, majority=True)
    assert idx.lookups == 1 + 3 * 4


def test_l1_to_hamming():
    a, b = l1_to_hamming([[0], [2]], 1, 2)
    assert list(a) == [0, 0] and list(b) == [1, 1]
    pts = list(itertools.product(range(4), repeat=2))
    for M in (1, 3):
        codes = l1_to_hamming(pts, M, 3)
        for (p, cp), (r, cr) in itertools.combinations(zip(pts, codes), 2):
            assert np.count_nonzero(cp != cr) == M * sum(abs(x - y) for x, y in zip(p, r))
    with pytest.raises(InputError):
        l1_to_hamming([[-1]], 1, 2)


def test_l2_gadget():
    eps = Fraction(1, 2)
    q, pts, sq, ok = epsdisj_l2_gadget({1, 2, 3, 4}, {5, 6}, 8, eps)
    assert ok and sq == [2, 2]
    q, pts, sq, ok = epsdisj_l2_gadget({1, 2, 3, 4}, {4, 6}, 8, eps)
    assert ok and min(sq) == 2 - 2 * eps == 1
    for e in (Fraction(1, 3), Fraction(1, 4)):
        size = int(1 / (e * e))
        S = set(range(1, size + 1))
        _, _, far, _ = epsdisj_l2_gadget(S, {size + 1}, size + 1, e)
        _, _, near, _ = epsdisj_l2_gadget(S, {1}, size + 1, e)
        assert far[0] - near[0] == 2 * e
    _, _, _, ok = epsdisj_l2_gadget({1, 2, 3, 4}, {1, 2}, 4, eps)
    assert not ok
