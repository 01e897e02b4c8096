"""Max-Min Ant System search core for the multidimensional knapsack.

One pheromone value per item. Each ant starts from the empty selection and
repeatedly adds a still-fitting item chosen by the pseudo-random proportional
rule: with probability ``q0`` the best-scoring candidate, otherwise a roulette
draw. The score of candidate ``i`` is ``tau_i**alpha * eta_i**beta * I_i**gamma``
where ``I_i`` is the dynamic impact of the item given the current loads.

Impact policies (``AcoParams.impact``):

``"capacity-ratio"``
    ``I_i = p_i / c_i`` with ``c_i`` the mean fraction of remaining capacity
    the item would consume, ``(1/m) * sum_k W[k, i] / R_k``. Recomputed at
    every step. Rescaling ``I`` by a constant leaves the choice distribution
    unchanged, so no normalisation is applied; sums that overflow or underflow
    are redone in log space.
``"none"``
    ``I_i = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .kernels import IMPACT_CODES, construct_batch
from .problem import MkpState, Solution

TAU_MAX = 1.0
TAU_MIN = 0.001
TAU_0 = 1.0
DELTA_TAU_0 = 1.0


@dataclass(frozen=True)
class AcoParams:
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 8.0
    q0: float = 0.01
    rho: float = 0.1
    ants_per_iteration: int = 512
    impact: str = "capacity-ratio"

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0.0 <= self.q0 <= 1.0:
            raise ValueError(f"q0 must lie in [0, 1], got {self.q0}")
        if self.ants_per_iteration < 1:
            raise ValueError("ants_per_iteration must be >= 1")
        if self.impact not in IMPACT_CODES:
            raise ValueError(f"unknown impact policy {self.impact!r}; choose from {sorted(IMPACT_CODES)}")

    def with_(self, **changes) -> "AcoParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class PheromoneField:
    """Per-item pheromone levels and the bounds they are clamped to."""

    tau: NDArray[np.float64]
    tau_min: float = TAU_MIN
    tau_max: float = TAU_MAX
    tau_0: float = TAU_0
    delta_tau_0: float = DELTA_TAU_0

    def __post_init__(self) -> None:
        tau = np.array(self.tau, dtype=np.float64)
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        if not 0.0 < self.tau_min <= self.tau_max:
            raise ValueError("need 0 < tau_min <= tau_max")

    @classmethod
    def uniform(cls, n: int, tau_0: float = TAU_0, **bounds) -> "PheromoneField":
        return cls(np.full(n, float(tau_0)), tau_0=tau_0, **bounds)

    @property
    def n(self) -> int:
        return int(self.tau.shape[0])

    def with_tau(self, tau: NDArray[np.float64]) -> "PheromoneField":
        return replace(self, tau=tau)

    def reset(self) -> "PheromoneField":
        return self.with_tau(np.full(self.n, self.tau_0))

    def clamped(self) -> "PheromoneField":
        return self.with_tau(np.clip(self.tau, self.tau_min, self.tau_max))

    def within_bounds(self) -> bool:
        return bool(((self.tau >= self.tau_min) & (self.tau <= self.tau_max)).all())


def evaporate(pheromone: PheromoneField, rho: float) -> PheromoneField:
    """Multiply every level by ``1 - rho`` and clamp into the bounds.

    Levels left above ``tau_max`` by honeydew are clamped here too.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return pheromone.with_tau(np.clip(pheromone.tau * (1.0 - rho), pheromone.tau_min, pheromone.tau_max))


def deposit(pheromone: PheromoneField, best: Solution, rho: float, delta_tau_0: float | None = None) -> PheromoneField:
    if delta_tau_0 is None:
        delta_tau_0 = pheromone.delta_tau_0
    picks = np.asarray(best.picks, dtype=bool)
    if picks.shape[0] != pheromone.n:
        raise ValueError("solution and pheromone field disagree on item count")
    tau = pheromone.tau.copy()
    tau[picks] = np.clip(tau[picks] + rho * delta_tau_0, pheromone.tau_min, pheromone.tau_max)
    return pheromone.with_tau(tau)


def iteration_uniforms(seed: int, state_index: int, iteration: int, ants: int, n: int) -> NDArray[np.float64]:
    """Random draws for one iteration; row ``a`` is the stream of ant ``a``.

    The block depends only on ``(seed, state_index, iteration)`` and its shape,
    never on how the ants are later scheduled.
    """
    rng = np.random.default_rng([seed, state_index, iteration])
    return rng.random((ants, 2 * n))


def _check_dims(state: MkpState, pheromone: PheromoneField, eta: NDArray[np.float64]) -> None:
    if pheromone.n != state.n or np.shape(eta) != (state.n,):
        raise ValueError(f"pheromone/heuristic dimensions do not match n={state.n}")


def construct_batch_for(
    state: MkpState,
    pheromone: PheromoneField,
    eta: NDArray[np.float64],
    params: AcoParams,
    uniforms: NDArray[np.float64],
) -> tuple[NDArray[np.uint8], NDArray[np.int64]]:
    _check_dims(state, pheromone, eta)
    if uniforms.ndim != 2 or uniforms.shape[1] != 2 * state.n:
        raise ValueError(f"uniforms must have shape (ants, {2 * state.n})")
    return construct_batch(
        state.weights_f,
        state.capacities,
        state.profits,
        pheromone.tau,
        eta,
        params.alpha,
        params.beta,
        params.gamma,
        params.q0,
        IMPACT_CODES[params.impact],
        uniforms,
    )


def construct_solution(
    state: MkpState,
    pheromone: PheromoneField,
    eta: NDArray[np.float64],
    params: AcoParams,
    rng: np.random.Generator,
) -> Solution:
    """Build one feasible solution using ``2 * n`` draws from ``rng``."""
    uniforms = rng.random((1, 2 * state.n))
    picks, _ = construct_batch_for(state, pheromone, eta, params, uniforms)
    return Solution.from_picks(state, picks[0])


@dataclass(frozen=True, eq=False)
class IterationResult:
    best: Solution
    pheromone: PheromoneField
    ant_profits: NDArray[np.int64] = field(repr=False)


def run_iteration(
    state: MkpState,
    pheromone: PheromoneField,
    eta: NDArray[np.float64],
    params: AcoParams,
    uniforms: NDArray[np.float64],
) -> IterationResult:
    """One MMAS iteration: construct, pick the iteration best, evaporate, deposit.

    ``uniforms`` holds one row per ant (see :func:`iteration_uniforms`). The
    highest profit wins; ties go to the lowest ant index.
    """
    if uniforms.shape[0] != params.ants_per_iteration:
        raise ValueError("need exactly one uniform row per ant")
    picks, profits = construct_batch_for(state, pheromone, eta, params, uniforms)
    winner = int(np.argmax(profits))
    best = Solution.from_picks(state, picks[winner])
    updated = deposit(evaporate(pheromone, params.rho), best, params.rho)
    return IterationResult(best, updated, profits)
