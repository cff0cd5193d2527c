import itertools
import math

import numpy as np
import pytest

from sonarflow.assignment import hungarian, solve_assignment


def brute_force_assignment(cost):
    """Exhaustive optimum: max cardinality over finite pairs, then min cost,
    then lexicographically smallest row->column vector (None sorts last)."""
    n, m = cost.shape
    best = None
    best_key = None
    for k in range(min(n, m), -1, -1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.permutations(range(m), k):
                if any(not math.isfinite(cost[r, c]) for r, c in zip(rows, cols)):
                    continue
                total = sum(cost[r, c] for r, c in zip(rows, cols))
                assign = [None] * n
                for r, c in zip(rows, cols):
                    assign[r] = c
                key = (total, tuple(m if a is None else a for a in assign))
                if best_key is None or key < best_key:
                    best_key = key
                    best = (assign, total)
        if best is not None:
            break
    return best


class TestHungarian:
    def test_two_by_two_spec_case(self):
        assign, cost = hungarian([[4.0, 1.0], [2.0, 3.0]])
        assert assign == [1, 0]
        assert cost == pytest.approx(3.0)

    def test_zero_diagonal_identity(self):
        cost = np.full((4, 4), 5.0)
        np.fill_diagonal(cost, 0.0)
        assign, total = hungarian(cost)
        assert assign == [0, 1, 2, 3]
        assert total == 0.0

    def test_infinity_is_unmatchable(self):
        cost = np.array([[np.inf, np.inf], [1.0, np.inf]])
        assign, total = hungarian(cost)
        assert assign == [None, 0]
        assert total == pytest.approx(1.0)

    def test_rectangular_matrices(self):
        assign, total = hungarian([[1.0, 9.0, 2.0]])
        assert assign == [0]
        cost = np.array([[1.0], [0.5], [2.0]])
        assign, total = hungarian(cost)
        assert assign == [None, 0, None]
        assert total == pytest.approx(0.5)

    def test_empty(self):
        assert hungarian(np.zeros((0, 3))) == ([], 0.0)
        assert hungarian(np.zeros((2, 0))) == ([None, None], 0.0)

    def test_lexicographic_tie_break(self):
        # both diagonals cost 2; {0->0, 1->1} is lexicographically first
        assign, total = hungarian([[1.0, 1.0], [1.0, 1.0]])
        assert assign == [0, 1]
        # equal-cost choice between assigning row 0 or row 1
        assign, _ = hungarian(np.array([[5.0], [5.0]]))
        assert assign == [0, None]

    def test_matches_brute_force_including_ties(self):
        rng = np.random.default_rng(17)
        for trial in range(250):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(1, 6))
            cost = rng.integers(0, 5, size=(n, m)).astype(float)  # many ties
            if trial % 3 == 0:
                cost[rng.random((n, m)) < 0.25] = np.inf
            expected = brute_force_assignment(cost)
            got = hungarian(cost)
            assert got[0] == expected[0], (cost, got, expected)
            assert got[1] == pytest.approx(expected[1])

    def test_rejects_nan_and_neg_inf(self):
        with pytest.raises(ValueError):
            hungarian([[np.nan]])
        with pytest.raises(ValueError):
            hungarian([[-np.inf]])


class TestSolveAssignment:
    def test_same_optimum_as_hungarian(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            cost = rng.uniform(-3, 3, size=(4, 5))
            _, fast = solve_assignment(cost)
            _, exact = hungarian(cost)
            assert fast == pytest.approx(exact)
