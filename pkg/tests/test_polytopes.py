from fractions import Fraction
import itertools
import math
import random

from hypothesis import given, settings, strategies as st
import pytest

from commlab.analyzer import FunctionMatrix, Rect, min_cover, verify_cover
from commlab.errors import InputError
from commlab.polytopes import (
    Infeasible, RationalLinearSystem, Unbounded, brute_max, cor_slack, factorization_to_cover,
    fix_x, fv_protocol_from_cover, is_feasible, lp_optimize, matmul, mu_matrix,
    permutahedron_ef, permutation_point, simplex_max,
)


def popcount(v):
    return bin(v).count("1")


def test_simplex_small():
    # max x + y with x + 2y <= 4, 3x + y <= 6, x, y >= 0: optimum at (8/5, 6/5)
    sys = RationalLinearSystem(2, 0, [("le", [1, 2], 4), ("le", [3, 1], 6),
                                      ("le", [-1, 0], 0), ("le", [0, -1], 0)])
    v, x, _ = lp_optimize(sys, [1, 1])
    assert v == Fraction(14, 5) and x == [Fraction(8, 5), Fraction(6, 5)]
    v, x, _ = lp_optimize(sys, [1, 1], maximize=False)
    assert v == 0


def test_simplex_signals():
    sys = RationalLinearSystem(1, 0, [("le", [-1], 0)])
    with pytest.raises(Unbounded):
        lp_optimize(sys, [1])
    sys = RationalLinearSystem(1, 0, [("le", [1], 0), ("le", [-1], -1)])
    with pytest.raises(Infeasible):
        lp_optimize(sys, [1])
    assert not is_feasible(sys)


def test_simplex_redundant_equalities():
    v, z = simplex_max([[1, 1], [2, 2]], [2, 4], [1, 0])
    assert v == 2 and z == [2, 0]


def test_text_round_trip():
    sys = permutahedron_ef(3)
    again = RationalLinearSystem.from_text(sys.to_text())
    assert again.rows == sys.rows and (again.n, again.p) == (3, 9)
    sys = RationalLinearSystem.from_text("vars 1 1\nle 1/2 -3/4 5\neq 1 1 0\n")
    assert sys.rows[0] == ("le", (Fraction(1, 2), Fraction(-3, 4)), Fraction(5))
    for bad in ("vars 1\n", "vars 1 0\nge 1 2\n", "vars 1 0\nle 1 2 3\n", "vars 1 0\nle 1/0 2\n"):
        with pytest.raises(InputError):
            RationalLinearSystem.from_text(bad)


def test_permutahedron_counts():
    for n in range(2, 6):
        sys = permutahedron_ef(n)
        assert len(sys.rows) == n * n + 3 * n
        assert (sys.n, sys.p) == (n, n * n)
    sys = permutahedron_ef(3)
    assert sys.count("le") == 9 and sys.count("eq") == 9
    with pytest.raises(InputError):
        permutahedron_ef(6)


def test_permutations_feasible():
    for n in (2, 3, 4):
        sys = permutahedron_ef(n)
        for p in itertools.permutations(range(1, n + 1)):
            assert sys.satisfied(permutation_point(p))


def test_non_permutation_infeasible():
    assert not is_feasible(fix_x(permutahedron_ef(3), [1, 1, 3]))
    assert is_feasible(fix_x(permutahedron_ef(3), [2, 2, 2]))   # barycentre
    # with row and column sums only bounded by 1, (1, 1, 3) slips in
    assert is_feasible(fix_x(permutahedron_ef(3, relaxed=True), [1, 1, 3]))


def test_relaxed_system_overshoots():
    v, _, _ = lp_optimize(permutahedron_ef(3, relaxed=True), [-1, 2, 3])
    assert v == 13 and brute_max([-1, 2, 3]) == 12


def test_lp_example():
    v, x, _ = lp_optimize(permutahedron_ef(3), [1, 2, 3])
    assert v == 14 and x == [1, 2, 3]
    v, x, _ = lp_optimize(permutahedron_ef(3), [0, 0, 0])
    assert v == 0 and sorted(x) == [1, 2, 3]


@pytest.mark.parametrize("n", [3, 4])
def test_lp_matches_brute_force(n):
    rng = random.Random(100 + n)
    sys = permutahedron_ef(n)
    for _ in range(20):
        c = [rng.randint(-9, 9) for _ in range(n)]
        v, x, _ = lp_optimize(sys, c)
        assert v == brute_max(c)
        assert sorted(x) == list(range(1, n + 1))


def test_sorting_objective_unique():
    n = 4
    sys = permutahedron_ef(n)
    for p in itertools.permutations(range(1, n + 1)):
        v, x, _ = lp_optimize(sys, list(p))
        assert x == list(p)
        # second best permutation is strictly worse, so the optimum is unique
        vals = sorted(sum(a * b for a, b in zip(p, q))
                      for q in itertools.permutations(range(1, n + 1)))
        assert vals[-1] > vals[-2] and v == vals[-1]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3), st.randoms(use_true_random=False))
def test_row_order_does_not_change_optimum(c, rnd):
    sys = permutahedron_ef(3)
    order = list(range(len(sys.rows)))
    rnd.shuffle(order)
    assert lp_optimize(sys.permuted(order), c)[0] == lp_optimize(sys, c)[0]


def test_cor_slack_examples():
    S = cor_slack(2)
    assert S.entries[0b01][0b01] == 0
    assert S.entries[0b11][0b00] == 1


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cor_slack_formula(n):
    S = cor_slack(n)
    for a in range(1 << n):
        for b in range(1 << n):
            e = S.entries[a][b]
            assert e >= 0 and e == (popcount(a & b) - 1) ** 2
    assert S.support() == mu_matrix(n)


def test_cor_slack_direct_substitution():
    # expand -sum_{i in S} z_i^2 + sum_{i != j in S} z_i z_j + 1 directly
    n = 3
    S = cor_slack(n)
    for a in range(1 << n):
        for b in range(1 << n):
            z = [b >> i & 1 for i in range(n)]
            mem = [i for i in range(n) if a >> i & 1]
            val = 1 - sum(z[i] * z[i] for i in mem) + sum(z[i] * z[j] for i in mem for j in mem if i != j)
            assert S.entries[a][b] == val


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mu_cover_and_protocol(n):
    M = mu_matrix(n)
    size, cover = min_cover(M, 1)
    assert size >= math.ceil(Fraction(3, 2) ** n)
    proto = fv_protocol_from_cover(M, cover)
    assert proto.cost == math.ceil(math.log2(size))
    assert proto.check_all()
    out = proto.run(0, 0, 0)
    assert out.transcript.bits_by("P") == proto.cost


def test_fv_protocol_edge_cases():
    ones = FunctionMatrix([[1, 1], [1, 1]])
    proto = fv_protocol_from_cover(ones, [Rect(({0, 1}, {0, 1}))])
    assert proto.cost == 0 and proto.check_all()
    M = FunctionMatrix([[1, 0], [1, 1]])
    with pytest.raises(InputError):
        fv_protocol_from_cover(M, [Rect(({0, 1}, {0, 1}))])
    with pytest.raises(InputError):
        fv_protocol_from_cover(M, [Rect(({0, 1}, {0}))])


def test_factorization_examples():
    rects = factorization_to_cover([[1], [2]], [[3, 1, 5]])
    assert rects == [Rect(({0, 1}, {0, 1, 2}))]
    I = [[int(i == j) for j in range(4)] for i in range(4)]
    assert factorization_to_cover(I, I) == [Rect(({i}, {i})) for i in range(4)]
    with pytest.raises(InputError):
        factorization_to_cover([[-1]], [[1]])


def test_factorization_of_cor_slack():
    # on two elements the slack is 1 when S & R is empty or full and 0 otherwise,
    # so it splits as the disjointness matrix plus one corner cell
    S = cor_slack(2)
    n = len(S.entries)
    I = [[int(i == j) for j in range(n)] for i in range(n)]
    disj = [[int(a & b == 0) for b in range(n)] for a in range(n)]
    T = [row + [int(a == 3)] for a, row in enumerate(disj)]
    U = I + [[int(b == 3) for b in range(n)]]
    for T_, U_ in ((T, U), (S.entries, I), (I, S.entries)):
        P = matmul(T_, U_)
        assert P == S.entries
        assert verify_cover(S.support(), factorization_to_cover(T_, U_), 1)
