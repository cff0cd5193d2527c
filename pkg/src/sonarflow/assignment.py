"""Minimum-cost assignment with unmatchable entries.

``hungarian`` implements the full contract used by the tracker: +inf cost
marks a pair as unmatchable, the result maximizes the number of matched
pairs and minimizes total cost among such matchings, and ties are broken
toward the lexicographically smallest row-to-column mapping (rows in order;
an unassigned row sorts after any column).  ``solve_assignment`` is the same
optimum without the tie-break pass, for hot paths where any optimal
matching will do.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

_COST_RTOL = 1e-9


def _validated(cost_matrix) -> np.ndarray:
    cost = np.asarray(cost_matrix, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if cost.size and (np.isnan(cost).any() or np.isneginf(cost).any()):
        raise ValueError("cost entries must be finite or +inf")
    return cost


def solve_assignment(cost_matrix) -> tuple[list[int | None], float]:
    """Max-cardinality, then min-total-cost matching; +inf is unmatchable."""
    cost = _validated(cost_matrix)
    return _solve(cost)


def _solve(cost: np.ndarray) -> tuple[list[int | None], float]:
    n, m = cost.shape
    assign: list[int | None] = [None] * n
    if n == 0 or m == 0:
        return assign, 0.0
    finite = np.isfinite(cost)
    if not finite.any():
        return assign, 0.0
    s = min(n, m)
    big = (2 * s + 1) * (float(np.abs(cost[finite]).max()) + 1.0)
    rows, cols = linear_sum_assignment(np.where(finite, cost, big))
    total = 0.0
    for r, c in zip(rows, cols):
        if finite[r, c]:
            assign[r] = int(c)
            total += float(cost[r, c])
    return assign, total


def _cardinality(assign: list[int | None]) -> int:
    return sum(1 for c in assign if c is not None)


def hungarian(cost_matrix) -> tuple[list[int | None], float]:
    """Optimal assignment with deterministic lexicographic tie-breaking.

    Returns (assignment, total_cost) where assignment[r] is the column
    matched to row r, or None.  Among all optimal matchings the one whose
    per-row column sequence is lexicographically smallest is returned,
    treating None as larger than any column index.
    """
    cost = _validated(cost_matrix)
    n, m = cost.shape
    base_assign, base_cost = _solve(cost)
    base_card = _cardinality(base_assign)
    if n == 0 or m == 0 or base_card == 0:
        return [None] * n, 0.0

    tol = _COST_RTOL * max(1.0, abs(base_cost))
    chosen: list[int | None] = []
    used: set[int] = set()
    fixed_cost = 0.0
    fixed_card = 0
    for r in range(n):
        candidates = [c for c in range(m) if c not in used and np.isfinite(cost[r, c])]
        for cand in candidates + [None]:
            trial_cost = fixed_cost + (cost[r, cand] if cand is not None else 0.0)
            trial_card = fixed_card + (1 if cand is not None else 0)
            rest_rows = [i for i in range(r + 1, n)]
            rest_cols = [j for j in range(m) if j not in used and j != cand]
            sub = cost[np.ix_(rest_rows, rest_cols)] if rest_rows and rest_cols else np.empty((0, 0))
            sub_assign, sub_cost = _solve(sub)
            if (
                trial_card + _cardinality(sub_assign) == base_card
                and abs(trial_cost + sub_cost - base_cost) <= tol
            ):
                chosen.append(cand)
                if cand is not None:
                    used.add(cand)
                    fixed_cost = trial_cost
                    fixed_card = trial_card
                break
        else:  # pragma: no cover - base optimum always extends some prefix
            raise RuntimeError("assignment refinement failed to extend prefix")
    total = sum(cost[r, c] for r, c in enumerate(chosen) if c is not None)
    return chosen, float(total)
