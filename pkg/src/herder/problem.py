"""MKP / DMKP data model, fitness, feasibility and heuristic information."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

EPS = 1e-9


class DimensionError(ValueError):
    """Array shapes do not agree with the problem dimensions."""


def _frozen_int_array(values: ArrayLike, ndim: int, name: str) -> NDArray[np.int64]:
    arr = np.array(values, dtype=np.int64)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if (arr < 0).any():
        raise ValueError(f"{name} must be non-negative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MkpState:
    """One static multidimensional knapsack instance.

    ``weights`` is knapsack-major, shape ``(m, n)``: ``weights[k, i]`` is the
    weight item ``i`` puts into knapsack ``k``.
    """

    state_index: int
    profits: NDArray[np.int64]
    weights: NDArray[np.int64]
    capacities: NDArray[np.int64]
    # float copy of the weights for the construction kernels
    weights_f: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        profits = _frozen_int_array(self.profits, 1, "profits")
        weights = _frozen_int_array(self.weights, 2, "weights")
        capacities = _frozen_int_array(self.capacities, 1, "capacities")
        n, m = profits.shape[0], capacities.shape[0]
        if n < 1 or m < 1:
            raise DimensionError("need at least one item and one knapsack")
        if weights.shape != (m, n):
            raise DimensionError(f"weights must have shape ({m}, {n}), got {weights.shape}")
        if self.state_index < 0:
            raise ValueError("state_index must be >= 0")
        wf = np.ascontiguousarray(weights, dtype=np.float64)
        wf.setflags(write=False)
        object.__setattr__(self, "profits", profits)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "capacities", capacities)
        object.__setattr__(self, "weights_f", wf)

    @property
    def n(self) -> int:
        return int(self.profits.shape[0])

    @property
    def m(self) -> int:
        return int(self.capacities.shape[0])

    def same_values(self, other: "MkpState") -> bool:
        return (
            np.array_equal(self.profits, other.profits)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.capacities, other.capacities)
        )


@dataclass(frozen=True, eq=False)
class Solution:
    picks: NDArray[np.bool_]
    profit: int
    loads: NDArray[np.int64]
    feasible: bool

    @classmethod
    def from_picks(cls, state: MkpState, picks: ArrayLike) -> "Solution":
        x = _as_picks(state, picks).copy()
        ok, loads = is_feasible(state, x)
        x.setflags(write=False)
        return cls(x, evaluate_profit(state, x), loads, ok)

    @classmethod
    def empty(cls, state: MkpState) -> "Solution":
        return cls.from_picks(state, np.zeros(state.n, dtype=bool))

    @property
    def items(self) -> NDArray[np.intp]:
        return np.flatnonzero(self.picks)

    def __len__(self) -> int:
        return int(self.picks.sum())


@dataclass(frozen=True, eq=False)
class DmkpInstance:
    """Ordered sequence of MKP states sharing item and knapsack counts."""

    name: str
    delta: float
    states: tuple[MkpState, ...]
    best_known: Mapping[int, int] | None = None

    def __post_init__(self) -> None:
        states = tuple(self.states)
        if not states:
            raise DimensionError("an instance needs at least one state")
        n, m = states[0].n, states[0].m
        for pos, st in enumerate(states):
            if st.state_index != pos:
                raise ValueError(f"state indices must be contiguous from 0; got {st.state_index} at {pos}")
            if st.n != n or st.m != m:
                raise DimensionError(f"state {pos} has shape n={st.n}, m={st.m}; expected n={n}, m={m}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        object.__setattr__(self, "states", states)

    @property
    def n(self) -> int:
        return self.states[0].n

    @property
    def m(self) -> int:
        return self.states[0].m

    @property
    def s_max(self) -> int:
        return len(self.states) - 1

    def __len__(self) -> int:
        return len(self.states)


def _as_picks(state: MkpState, picks: ArrayLike) -> NDArray[np.bool_]:
    x = np.asarray(picks)
    if x.ndim != 1 or x.shape[0] != state.n:
        raise DimensionError(f"picks must have length {state.n}, got shape {x.shape}")
    if x.dtype == np.bool_:
        return x
    if ((x != 0) & (x != 1)).any():
        raise ValueError("picks must be binary")
    return x.astype(bool)


def evaluate_profit(state: MkpState, picks: ArrayLike) -> int:
    """Total profit of the selected items; feasibility is not checked."""
    x = _as_picks(state, picks)
    return int(state.profits[x].sum(dtype=np.int64))


def is_feasible(state: MkpState, picks: ArrayLike) -> tuple[bool, NDArray[np.int64]]:
    """Return ``(ok, loads)`` where ``loads[k]`` is the weight packed into knapsack k."""
    x = _as_picks(state, picks)
    loads = state.weights[:, x].sum(axis=1, dtype=np.int64)
    return bool((loads <= state.capacities).all()), loads


def heuristic(state: MkpState) -> NDArray[np.float64]:
    """Profit over total weight per item, with zero weights guarded by ``EPS``."""
    total = state.weights.sum(axis=0).astype(np.float64)
    return state.profits / np.maximum(total, EPS)


def normalize_heuristic(eta: Sequence[float] | NDArray[np.float64]) -> NDArray[np.float64]:
    """Affine rescale to [0, 1]; a constant input maps to 0.5 everywhere."""
    eta = np.asarray(eta, dtype=np.float64)
    if eta.size == 0:
        raise ValueError("heuristic must be non-empty")
    lo, hi = eta.min(), eta.max()
    if hi == lo:
        return np.full_like(eta, 0.5)
    return (eta - lo) / (hi - lo)


def random_mkp(
    n: int,
    m: int,
    seed: int,
    tightness: float = 0.5,
    state_index: int = 0,
) -> MkpState:
    """Correlated random MKP in the style of the OR-Library benchmark sets.

    Weights are uniform on [1, 1000], capacities are ``tightness`` times the
    row sums, and each profit is the mean item weight plus a uniform bonus on
    [0, 500).
    """
    if not 0.0 < tightness < 1.0:
        raise ValueError("tightness must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    weights = rng.integers(1, 1001, size=(m, n))
    capacities = np.maximum(1, np.floor(tightness * weights.sum(axis=1))).astype(np.int64)
    profits = np.rint(weights.mean(axis=0) + 500.0 * rng.random(n)).astype(np.int64)
    return MkpState(state_index, profits, weights, capacities)
