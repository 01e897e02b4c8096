"""Inter-state strategies: Full-Restart, Pheromone-Sharing and Aphids.

A strategy only acts between states. :func:`on_state_begin` produces the
pheromone the search starts from, :func:`on_state_end` updates whatever the
strategy carries into the next state.

Aphids keep a per-item population that outlives each state::

    once per run:   A_i = A_0
    state begins:   tau_i = tau_0
                    A_i = max(0, A_i * (1 + (eta_i - mean(eta)) * A_r))
                    tau_i = tau_i + A_i * A_h
    state ends:     A_i = A_i * (1 - A_k)
                    A_i = A_i + A_l        for items in the state's best solution

``eta`` is the heuristic rescaled to [0, 1].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from .aco_core import PheromoneField
from .problem import Solution


class UsageError(RuntimeError):
    """A strategy hook was called out of order."""


class StrategyKind(enum.Enum):
    FULL_RESTART = "full-restart"
    PHEROMONE_SHARING = "pheromone-sharing"
    APHIDS = "aphids"

    @classmethod
    def parse(cls, name: "str | StrategyKind") -> "StrategyKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown strategy {name!r}; choose from {[k.value for k in cls]}") from None


@dataclass(frozen=True)
class AphidParams:
    a0: float = 1.0
    relocation: float = 2.0
    honeydew: float = 1.0
    lay: float = 1.0
    kill: float = 0.8

    def __post_init__(self) -> None:
        if self.a0 <= 0:
            raise ValueError("a0 must be > 0")
        if self.relocation < 0 or self.honeydew < 0 or self.lay < 0:
            raise ValueError("relocation, honeydew and lay rates must be >= 0")
        if not 0.0 <= self.kill <= 1.0:
            raise ValueError("kill rate must lie in [0, 1]")

    def with_(self, **changes) -> "AphidParams":
        return replace(self, **changes)


# untuned starting point of the one-parameter-at-a-time sweep
SWEEP_DEFAULTS = AphidParams(a0=1.0, relocation=1.0, honeydew=1.0, lay=1.0, kill=0.5)
TUNED = AphidParams()

# short names used by the CLI sweep
PARAM_ALIASES = {"Ar": "relocation", "Ah": "honeydew", "Al": "lay", "Ak": "kill", "A0": "a0"}


@dataclass(frozen=True, eq=False)
class AphidField:
    levels: NDArray[np.float64]
    params: AphidParams

    def __post_init__(self) -> None:
        levels = np.array(self.levels, dtype=np.float64)
        if (levels < 0).any():
            raise ValueError("aphid levels must be non-negative")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    @property
    def n(self) -> int:
        return int(self.levels.shape[0])

    @property
    def total(self) -> float:
        return float(self.levels.sum())

    def with_levels(self, levels: NDArray[np.float64]) -> "AphidField":
        return AphidField(levels, self.params)


def init_aphids(n: int, a0: float | AphidParams = 1.0) -> AphidField:
    params = a0 if isinstance(a0, AphidParams) else TUNED.with_(a0=float(a0))
    if n < 1:
        raise ValueError("n must be >= 1")
    return AphidField(np.full(n, params.a0), params)


def relocate_aphids(field: AphidField, eta_hat: NDArray[np.float64], eta_mean: float | None = None) -> AphidField:
    """Shift population toward items with above-average heuristic value.

    Levels that the multiplier would push below zero are clamped at zero.
    """
    eta_hat = np.asarray(eta_hat, dtype=np.float64)
    if eta_hat.shape != (field.n,):
        raise ValueError("heuristic and aphid field disagree on item count")
    if eta_mean is None:
        eta_mean = float(eta_hat.mean())
    factor = 1.0 + (eta_hat - eta_mean) * field.params.relocation
    return field.with_levels(np.maximum(0.0, field.levels * factor))


def collect_honeydew(pheromone: PheromoneField, field: AphidField) -> PheromoneField:
    # deliberately unclamped; the first evaporation brings levels back into bounds
    if pheromone.n != field.n:
        raise ValueError("pheromone and aphid field disagree on item count")
    return pheromone.with_tau(pheromone.tau + field.levels * field.params.honeydew)


def kill_aphids(field: AphidField) -> AphidField:
    return field.with_levels(field.levels * (1.0 - field.params.kill))


def lay_aphids(field: AphidField, best: Solution) -> AphidField:
    picks = np.asarray(best.picks, dtype=bool)
    if picks.shape[0] != field.n:
        raise ValueError("solution and aphid field disagree on item count")
    return field.with_levels(field.levels + field.params.lay * picks)


def on_state_begin(
    kind: StrategyKind,
    carried: PheromoneField | None,
    aphids: AphidField | None,
    eta_hat: NDArray[np.float64],
    template: PheromoneField,
) -> tuple[PheromoneField, AphidField | None]:
    """Pheromone to start the next state's search from.

    ``carried`` is the pheromone at the end of the previous state (``None``
    before the first state); ``template`` supplies ``tau_0`` and the bounds.
    Returns the starting pheromone and the (possibly relocated) aphid field.
    """
    kind = StrategyKind.parse(kind)
    fresh = template.reset()
    if kind is StrategyKind.FULL_RESTART:
        return fresh, aphids
    if kind is StrategyKind.PHEROMONE_SHARING:
        return (fresh if carried is None else carried), aphids
    if aphids is None:
        raise UsageError("aphid field must be initialised before the first state")
    aphids = relocate_aphids(aphids, eta_hat)
    return collect_honeydew(fresh, aphids), aphids


def on_state_end(kind: StrategyKind, aphids: AphidField | None, best: Solution) -> AphidField | None:
    kind = StrategyKind.parse(kind)
    if kind is not StrategyKind.APHIDS:
        return aphids
    if aphids is None:
        raise UsageError("aphid field must be initialised before the first state")
    return lay_aphids(kill_aphids(aphids), best)


class StrategyState:
    """Per-run bookkeeping around the hook functions.

    Owns the aphid field and the pheromone carried between states, and
    enforces that aphids are initialised exactly once.
    """

    def __init__(self, kind: StrategyKind | str, aphid_params: AphidParams = TUNED):
        self.kind = StrategyKind.parse(kind)
        self.aphid_params = aphid_params
        self.aphids: AphidField | None = None
        self.carried: PheromoneField | None = None
        self._initialised = False

    def initialise(self, n: int) -> None:
        if self._initialised:
            raise UsageError("aphids are initialised once per dynamic run")
        self._initialised = True
        if self.kind is StrategyKind.APHIDS:
            self.aphids = init_aphids(n, self.aphid_params)

    def begin_state(self, eta_hat: NDArray[np.float64], template: PheromoneField) -> PheromoneField:
        if not self._initialised:
            raise UsageError("initialise() must be called before the first state")
        pheromone, self.aphids = on_state_begin(self.kind, self.carried, self.aphids, eta_hat, template)
        return pheromone

    def end_state(self, best: Solution, final_pheromone: PheromoneField) -> None:
        self.aphids = on_state_end(self.kind, self.aphids, best)
        self.carried = final_pheromone
