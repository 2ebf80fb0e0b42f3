"""Exhaustive search over count-feasible assignments (verification only)."""

from __future__ import annotations

from math import factorial

import numpy as np

from .core import Assignment, _values, check_counts

MAX_ENUMERATION = 10**7


class InstanceTooLarge(ValueError):
    pass


def n_feasible(counts) -> int:
    """Number of label vectors with exactly the given class counts."""
    counts = [int(c) for c in counts]
    total = factorial(sum(counts))
    for c in counts:
        total //= factorial(c)
    return total


def brute_force(C, counts, limit: int = MAX_ENUMERATION) -> Assignment:
    """Exact optimum by depth-first enumeration in lexicographic label order.

    Only strictly better vectors replace the incumbent, so among optimal
    label vectors the lexicographically smallest is returned. Partial sums
    accumulate in ascending example order, matching ``assignment_objective``.
    """
    vals = _values(C)
    n, m = vals.shape
    room = check_counts(n, counts).tolist()
    size = n_feasible(room)
    if size > limit:
        raise InstanceTooLarge(f"{size} feasible assignments exceeds limit {limit}")
    rows = vals.tolist()
    labels = [0] * n
    best_val = float("inf")
    best = None

    def dfs(i, partial):
        nonlocal best_val, best
        if i == n:
            if partial < best_val:
                best_val, best = partial, labels.copy()
            return
        row = rows[i]
        for y in range(m):
            if room[y]:
                room[y] -= 1
                labels[i] = y
                dfs(i + 1, partial + row[y])
                room[y] += 1

    if n == 0:
        return Assignment(np.zeros(0, dtype=np.int64), m, 0.0, {"enumerated": 1})
    dfs(0, 0.0)
    return Assignment(np.array(best), m, best_val, {"enumerated": size})
