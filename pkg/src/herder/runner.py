"""Event-triggered optimisation of a dynamic instance.

States are dispatched one at a time. Each state gets a fixed budget: either
wall-clock time proportional to the item count, or a fixed number of
iterations (deterministic mode). The budget is checked between iterations, so
an iteration that has started always completes.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from .aco_core import AcoParams, PheromoneField, iteration_uniforms, run_iteration
from .problem import DmkpInstance, MkpState, Solution, heuristic, is_feasible, normalize_heuristic
from .strategies import TUNED, AphidParams, StrategyKind, StrategyState

WALL_CLOCK = "wall_clock"
ITERATIONS = "iterations"


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    strategy: StrategyKind = StrategyKind.APHIDS
    budget_mode: str = ITERATIONS
    seconds_per_200_items: float = 1.0
    iterations_per_state: int = 100
    runs: int = 1
    master_seed: int = 0
    aco: AcoParams = field(default_factory=AcoParams)
    aphids: AphidParams = TUNED
    pheromone: PheromoneField = field(default_factory=lambda: PheromoneField.uniform(1))

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", StrategyKind.parse(self.strategy))
        if self.budget_mode not in (WALL_CLOCK, ITERATIONS):
            raise ConfigurationError(f"budget_mode must be {WALL_CLOCK!r} or {ITERATIONS!r}")
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.budget_mode == ITERATIONS and self.iterations_per_state < 1:
            raise ConfigurationError("iterations_per_state must be >= 1")
        if self.budget_mode == WALL_CLOCK and self.seconds_per_200_items <= 0:
            raise ConfigurationError("seconds_per_200_items must be > 0")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def snapshot(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "budget_mode": self.budget_mode,
            "seconds_per_200_items": self.seconds_per_200_items,
            "iterations_per_state": self.iterations_per_state,
            "runs": self.runs,
            "master_seed": self.master_seed,
            "aco": asdict(self.aco),
            "aphids": asdict(self.aphids),
            "pheromone": {
                "tau_0": self.pheromone.tau_0,
                "tau_min": self.pheromone.tau_min,
                "tau_max": self.pheromone.tau_max,
                "delta_tau_0": self.pheromone.delta_tau_0,
            },
        }


@dataclass(eq=False)
class StateResult:
    state_index: int
    first_iteration_profit: int
    final_profit: int
    final_picks: NDArray[np.bool_] = field(repr=False)
    iterations: int
    elapsed: float
    # best-so-far profit after each iteration and when it was recorded (s since state start)
    best_series: NDArray[np.int64] = field(repr=False)
    time_series: NDArray[np.float64] = field(repr=False)
    budget: float = 0.0

    def normalized_times(self, budget_mode: str) -> NDArray[np.float64]:
        if budget_mode == ITERATIONS:
            return np.arange(1, self.iterations + 1) / float(self.budget)
        return np.minimum(1.0, self.time_series / self.budget)


@dataclass(eq=False)
class RunRecord:
    config: dict
    seed: int
    run_id: int
    instance_name: str
    states: list[StateResult]

    @property
    def final_profits(self) -> NDArray[np.int64]:
        return np.array([s.final_profit for s in self.states], dtype=np.int64)

    @property
    def first_profits(self) -> NDArray[np.int64]:
        return np.array([s.first_iteration_profit for s in self.states], dtype=np.int64)


def state_budget(n: int, config: RunConfig) -> float | int:
    """Seconds (wall-clock mode) or iterations allowed per state."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if config.budget_mode == WALL_CLOCK:
        return n / 200.0 * config.seconds_per_200_items
    return config.iterations_per_state


def run_seed(master_seed: int, run_id: int) -> int:
    """Seed of run ``run_id`` in a batch; independent of the other runs."""
    return int(np.random.SeedSequence([master_seed, run_id]).generate_state(1, dtype=np.uint32)[0])


Observer = Callable[[str, int, object], None]


def _search_state(
    state: MkpState,
    start: PheromoneField,
    eta_hat: NDArray[np.float64],
    config: RunConfig,
    seed: int,
    t0: float,
    observer: Observer | None,
) -> tuple[StateResult, Solution, PheromoneField]:
    budget = state_budget(state.n, config)
    timed = config.budget_mode == WALL_CLOCK
    ants = config.aco.ants_per_iteration
    pheromone = start
    best: Solution | None = None
    first = 0
    bests: list[int] = []
    times: list[float] = []
    it = 0
    while True:
        if timed:
            if it > 0 and time.perf_counter() - t0 >= budget:
                break
        elif it >= budget:
            break
        uniforms = iteration_uniforms(seed, state.state_index, it, ants, state.n)
        result = run_iteration(state, pheromone, eta_hat, config.aco, uniforms)
        pheromone = result.pheromone
        if best is None or result.best.profit > best.profit:
            best = result.best
        if it == 0:
            first = result.best.profit
        it += 1
        bests.append(best.profit)
        times.append(time.perf_counter() - t0)
        if observer is not None:
            observer("iteration", state.state_index, result)
    assert best is not None
    elapsed = time.perf_counter() - t0
    res = StateResult(
        state_index=state.state_index,
        first_iteration_profit=first,
        final_profit=best.profit,
        final_picks=np.asarray(best.picks, dtype=bool),
        iterations=it,
        elapsed=elapsed,
        best_series=np.array(bests, dtype=np.int64),
        time_series=np.array(times),
        budget=float(budget),
    )
    return res, best, pheromone


def run_dynamic(
    instance: DmkpInstance,
    config: RunConfig,
    seed: int | None = None,
    run_id: int = 0,
    start_state: int = 0,
    observer: Observer | None = None,
) -> RunRecord:
    """Optimise every state of ``instance`` in order.

    ``observer(event, state_index, payload)`` is called with ``"begin"`` (the
    starting pheromone), ``"iteration"`` (the iteration result) and ``"end"``
    (the state result). States are read from ``instance.states`` only when
    dispatched.
    """
    if seed is None:
        seed = run_seed(config.master_seed, run_id)
    n_states = len(instance.states)
    if not 0 <= start_state < n_states:
        raise ConfigurationError(f"start_state {start_state} outside 0..{n_states - 1}")
    n = instance.n
    template = PheromoneField.uniform(
        n,
        tau_0=config.pheromone.tau_0,
        tau_min=config.pheromone.tau_min,
        tau_max=config.pheromone.tau_max,
        delta_tau_0=config.pheromone.delta_tau_0,
    )
    strategy = StrategyState(config.strategy, config.aphids)
    strategy.initialise(n)
    results: list[StateResult] = []
    for s in range(start_state, n_states):
        state = instance.states[s]
        if state.n != n:
            raise ConfigurationError(f"state {s} has {state.n} items, expected {n}")
        # pre-search work counts against the state's window
        t0 = time.perf_counter()
        eta_hat = normalize_heuristic(heuristic(state))
        start = strategy.begin_state(eta_hat, template)
        if observer is not None:
            observer("begin", s, start)
        res, best, final = _search_state(state, start, eta_hat, config, seed, t0, observer)
        strategy.end_state(best, final)
        results.append(res)
        if observer is not None:
            observer("end", s, res)
    return RunRecord(config.snapshot(), seed, run_id, instance.name, results)


def run_batch(instance: DmkpInstance, config: RunConfig) -> list[RunRecord]:
    return [run_dynamic(instance, config, run_id=r) for r in range(config.runs)]


def check_record(instance: DmkpInstance, record: RunRecord) -> None:
    """Raise ``AssertionError`` if a record breaks its structural invariants."""
    assert len(record.states) == len(instance.states) or record.states[0].state_index > 0
    for res in record.states:
        state = instance.states[res.state_index]
        ok, _ = is_feasible(state, res.final_picks)
        assert ok, f"state {res.state_index}: infeasible final solution"
        assert res.final_profit >= res.first_iteration_profit
        assert (np.diff(res.best_series) >= 0).all()
        assert res.best_series[-1] == res.final_profit


def pooled_best(records: Sequence[RunRecord]) -> dict[int, int]:
    """Best final profit per state over a set of records."""
    best: dict[int, int] = {}
    for rec in records:
        for res in rec.states:
            best[res.state_index] = max(best.get(res.state_index, 0), res.final_profit)
    return best
