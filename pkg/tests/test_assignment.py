import itertools

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from dkcfsim.assignment import hungarian, solve_assignment


def brute_force_best(cost):
    """All optimal assignments by exhaustive enumeration.

    Returns (min_total, list of assignments), each assignment a sorted
    tuple of (row, col) pairs.
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    best = None
    optima = []
    if n <= m:
        rows = range(n)
        for cols in itertools.permutations(range(m), n):
            total = sum(cost[i, c] for i, c in zip(rows, cols))
            key = tuple(zip(rows, cols))
            if best is None or total < best - 1e-12:
                best = total
                optima = [key]
            elif abs(total - best) <= 1e-12:
                optima.append(key)
    else:
        for rows in itertools.permutations(range(n), m):
            total = sum(cost[r, j] for j, r in enumerate(rows))
            key = tuple(sorted((r, j) for j, r in enumerate(rows)))
            if best is None or total < best - 1e-12:
                best = total
                optima = [key]
            elif abs(total - best) <= 1e-12:
                optima.append(key)
    return best, optima


def total_of(cost, pairs):
    return sum(float(np.asarray(cost)[i, j]) for i, j in pairs)


def lexicographic_min(optima):
    def key(assignment):
        # Row-major pair list; missing rows sort after present ones.
        return tuple(assignment)

    return min(optima, key=key)


def test_one_by_one():
    assert hungarian([[3.5]]) == [(0, 0)]


def test_zero_diagonal():
    cost = np.full((3, 3), 100.0)
    np.fill_diagonal(cost, 0.0)
    assert hungarian(cost) == [(0, 0), (1, 1), (2, 2)]


def test_classic_swap():
    cost = np.array([[1.0, 3.0], [2.0, 8.0]])
    pairs = hungarian(cost)
    assert pairs == [(0, 1), (1, 0)]
    assert total_of(cost, pairs) == 5.0


def test_random_5x5_matches_brute_force(rng):
    for _ in range(60):
        cost = rng.uniform(0, 10, size=(5, 5))
        pairs = hungarian(cost)
        best, _ = brute_force_best(cost)
        assert total_of(cost, pairs) == pytest.approx(best, abs=1e-9)


def test_rectangular_matches_brute_force(rng):
    for _ in range(60):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 6))
        cost = rng.uniform(0, 10, size=(n, m))
        pairs = hungarian(cost)
        assert len(pairs) == min(n, m)
        best, _ = brute_force_best(cost)
        assert total_of(cost, pairs) == pytest.approx(best, abs=1e-9)


def test_matches_scipy(rng):
    for _ in range(100):
        n = int(rng.integers(1, 8))
        m = int(rng.integers(1, 8))
        cost = rng.uniform(0, 100, size=(n, m))
        pairs = hungarian(cost)
        rows, cols = linear_sum_assignment(cost)
        assert total_of(cost, pairs) == pytest.approx(
            float(cost[rows, cols].sum()), abs=1e-9
        )


def test_lexicographic_tie_break_integer_costs(rng):
    # Small integer costs force plenty of exact ties; the solver must pick
    # the lexicographically smallest optimal assignment every time.
    for _ in range(150):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        cost = rng.integers(0, 3, size=(n, m)).astype(float)
        pairs = hungarian(cost)
        best, optima = brute_force_best(cost)
        assert total_of(cost, pairs) == pytest.approx(best, abs=1e-12)
        assert tuple(pairs) == lexicographic_min(optima)


def test_all_equal_costs_lexicographic():
    cost = np.ones((3, 3))
    assert hungarian(cost) == [(0, 0), (1, 1), (2, 2)]


def test_solver_rejects_non_finite():
    with pytest.raises(ValueError):
        hungarian(np.array([[np.inf, 1.0], [1.0, 2.0]]))


def test_solve_assignment_same_cost_as_hungarian(rng):
    for _ in range(80):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        cost = rng.uniform(0, 50, size=(n, m))
        a = total_of(cost, hungarian(cost))
        b = total_of(cost, solve_assignment(cost))
        assert a == pytest.approx(b, abs=1e-9)


def test_empty_dimensions():
    assert hungarian(np.empty((0, 3))) == []
    assert hungarian(np.empty((3, 0))) == []
