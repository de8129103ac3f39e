"""Minimum-cost assignment.

``hungarian`` is the public solver: optimal total cost, with ties between
equal-cost optima broken toward the lexicographically smallest assignment
(compare the (row, col) pair lists sorted by row; an unmatched row ranks
after any matched alternative for that row). It runs a Kuhn-Munkres solve
with potentials, uses the duals to screen for possibly tied optima, and
only then pays for the exact tie refinement.

``solve_assignment`` is the hot-path variant used by association, track
matching and scoring, where equal-cost ties can only occur among
gate-sentinel pairs that are discarded afterwards; it delegates to
scipy's C implementation.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

_EQ_RTOL = 1e-9  # relative tolerance for "same total cost"
_TIGHT_RTOL = 1e-7  # generous screen tolerance for reduced costs


def _km_square(cost: np.ndarray):
    """Potentials-based KM on a square matrix.

    Returns (col_for_row, u, v). Deterministic: column scans ascend, and
    strict comparisons keep the lowest-index candidate on ties.
    """
    k = cost.shape[0]
    u = np.zeros(k + 1)
    v = np.zeros(k + 1)
    p = np.zeros(k + 1, dtype=np.int64)  # row matched to each column, 1-based
    way = np.zeros(k + 1, dtype=np.int64)
    for i in range(1, k + 1):
        p[0] = i
        j0 = 0
        minv = np.full(k + 1, np.inf)
        used = np.zeros(k + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            free = ~used[1:]
            improve = free & (cur < minv[1:])
            if improve.any():
                idx = np.flatnonzero(improve) + 1
                minv[idx] = cur[idx - 1]
                way[idx] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            used_idx = np.flatnonzero(used)
            u[p[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1
    col_for_row = np.empty(k, dtype=np.int64)
    for j in range(1, k + 1):
        col_for_row[p[j] - 1] = j - 1
    return col_for_row, u[1:], v[1:]


def _pad_square(cost: np.ndarray) -> np.ndarray:
    n, m = cost.shape
    k = max(n, m)
    padded = np.zeros((k, k))
    padded[:n, :m] = cost
    return padded


def _real_pairs(col_for_row: np.ndarray, n: int, m: int) -> list:
    return [
        (i, int(c)) for i, c in enumerate(col_for_row[:n]) if c < m
    ]


def solve_assignment(cost) -> list:
    """Optimal assignment without the lexicographic tie refinement."""
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    if not np.isfinite(cost).all():
        raise ValueError("assignment costs must be finite")
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


def _unique_by_peeling(tight: np.ndarray, n_real: int) -> bool:
    """True if peeling forced a unique tight-edge choice for every real row.

    Sufficient condition only: a False result means "possibly tied", which
    just routes the call through the exact refinement.
    """
    k = tight.shape[0]
    row_alive = np.ones(k, dtype=bool)
    col_alive = np.ones(k, dtype=bool)
    forced_rows = np.zeros(k, dtype=bool)
    while True:
        sub = tight & row_alive[:, None] & col_alive[None, :]
        row_counts = sub.sum(axis=1)
        col_counts = sub.sum(axis=0)
        rows1 = np.flatnonzero(row_alive & (row_counts == 1))
        if rows1.size:
            i = int(rows1[0])
            j = int(np.argmax(sub[i]))
        else:
            cols1 = np.flatnonzero(col_alive & (col_counts == 1))
            if not cols1.size:
                break
            j = int(cols1[0])
            i = int(np.argmax(sub[:, j]))
        row_alive[i] = False
        col_alive[j] = False
        forced_rows[i] = True
    return bool(forced_rows[:n_real].all())


def hungarian(cost) -> list:
    """Min-cost assignment of min(n, m) pairs as (row, col) tuples.

    Among equal-cost optima, returns the lexicographically smallest
    assignment.
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    if not np.isfinite(cost).all():
        raise ValueError("assignment costs must be finite")

    padded = _pad_square(cost)
    k = padded.shape[0]
    col_for_row, u, v = _km_square(padded)
    total = float(padded[np.arange(k), col_for_row].sum())

    scale = max(1.0, float(np.abs(cost).max()))
    tight = (padded - u[:, None] - v[None, :]) <= _TIGHT_RTOL * scale
    if _unique_by_peeling(tight, n):
        return _real_pairs(col_for_row, n, m)
    return _refine_lexicographic(padded, n, m, total)


def _refine_lexicographic(padded: np.ndarray, n: int, m: int, total: float) -> list:
    """Fix real rows in order to their smallest optimal column."""
    k = padded.shape[0]
    tol = _EQ_RTOL * max(1.0, abs(total))
    free_cols = list(range(k))
    fixed_cost = 0.0
    pairs = []
    rows_left = list(range(k))
    for i in range(n):
        rows_left.remove(i)
        # Real columns ascending, then any one dummy column (they are
        # interchangeable, so testing one suffices).
        real_candidates = [c for c in free_cols if c < m]
        dummy_candidates = [c for c in free_cols if c >= m][:1]
        chosen = None
        for c in real_candidates + dummy_candidates:
            rest_cols = [x for x in free_cols if x != c]
            sub = padded[np.ix_(rows_left, rest_cols)]
            if sub.size:
                rr, cc = linear_sum_assignment(sub)
                rest = float(sub[rr, cc].sum())
            else:
                rest = 0.0
            if abs(fixed_cost + padded[i, c] + rest - total) <= tol:
                chosen = c
                break
        if chosen is None:  # numerical fallback: keep the solver's choice
            sub = padded[np.ix_([i] + rows_left, free_cols)]
            rr, cc = linear_sum_assignment(sub)
            chosen = free_cols[int(cc[list(rr).index(0)])]
        fixed_cost += padded[i, chosen]
        free_cols.remove(chosen)
        if chosen < m:
            pairs.append((i, chosen))
    return pairs
