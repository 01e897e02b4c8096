"""Independent reference computations used by the tests."""

from __future__ import annotations

import numpy as np

from herder.problem import MkpState


def subsets(n: int) -> np.ndarray:
    """All 2**n binary vectors as a ``(2**n, n)`` bool array, item 0 in the lowest bit."""
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def brute_force_optimum(state: MkpState) -> tuple[int, np.ndarray]:
    """Exhaustive enumeration; fine for n <= 20."""
    x = subsets(state.n)
    loads = x.astype(np.int64) @ state.weights.T
    ok = (loads <= state.capacities).all(axis=1)
    profit = np.where(ok, x.astype(np.int64) @ state.profits, -1)
    best = int(np.argmax(profit))
    return int(profit[best]), x[best]


def naive_profit(profits, picks) -> int:
    total = 0
    for p, x in zip(profits, picks):
        if x:
            total += int(p)
    return total
