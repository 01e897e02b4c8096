"""Result gap, gap slip, batch aggregates, t-test and convergence curves."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import special

from .runner import ITERATIONS, RunRecord


def result_gap(profit: int, best_known: int) -> float:
    """Percent shortfall of ``profit`` from ``best_known``; negative means a new best."""
    if best_known <= 0:
        raise ValueError(f"best-known profit must be > 0, got {best_known}")
    return 100.0 * (best_known - profit) / best_known


def is_new_best(profit: int, best_known: int) -> bool:
    return profit > best_known


def gap_slip(prev_final_gap: float, curr_first_gap: float) -> float:
    return curr_first_gap - prev_final_gap


def state_gaps(record: RunRecord, best_known: Mapping[int, int]) -> NDArray[np.float64]:
    """Final-profit gap per state; NaN where no best-known value exists."""
    return np.array(
        [
            result_gap(r.final_profit, best_known[r.state_index]) if r.state_index in best_known else math.nan
            for r in record.states
        ]
    )


def state_slips(record: RunRecord, best_known: Mapping[int, int]) -> NDArray[np.float64]:
    """Slip for every state after the first of the record; NaN where undefined."""
    out = []
    for prev, curr in zip(record.states, record.states[1:]):
        if prev.state_index in best_known and curr.state_index in best_known:
            out.append(
                gap_slip(
                    result_gap(prev.final_profit, best_known[prev.state_index]),
                    result_gap(curr.first_iteration_profit, best_known[curr.state_index]),
                )
            )
        else:
            out.append(math.nan)
    return np.array(out)


def _nanmean(values: NDArray[np.float64]) -> float:
    values = values[~np.isnan(values)]
    return float(values.mean()) if values.size else math.nan


@dataclass
class Summary:
    mean_gap: float
    mean_slip: float
    gap_std: float
    run_gaps: NDArray[np.float64] = field(repr=False)
    run_slips: NDArray[np.float64] = field(repr=False)
    state_gap_series: NDArray[np.float64] = field(repr=False)
    new_best_states: int = 0

    @property
    def runs(self) -> int:
        return int(self.run_gaps.shape[0])


def aggregate(records: Sequence[RunRecord], best_known: Mapping[int, int]) -> Summary:
    """Average gaps over states, then over runs.

    ``gap_std`` is the sample standard deviation of the per-run mean gaps.
    """
    if not records:
        raise ValueError("cannot aggregate an empty batch")
    names = {r.instance_name for r in records}
    if len(names) > 1:
        raise ValueError(f"records span several instances: {sorted(names)}")
    gaps = [state_gaps(r, best_known) for r in records]
    run_gaps = np.array([_nanmean(g) for g in gaps])
    run_slips = np.array([_nanmean(state_slips(r, best_known)) for r in records])
    with warnings.catch_warnings():
        # states without best-known values are all-NaN columns
        warnings.simplefilter("ignore", RuntimeWarning)
        series = np.nanmean(np.vstack(gaps), axis=0) if all(g.shape == gaps[0].shape for g in gaps) else np.array([])
    new_best = sum(
        int(r.final_profit > best_known[r.state_index])
        for rec in records
        for r in rec.states
        if r.state_index in best_known
    )
    valid = run_gaps[~np.isnan(run_gaps)]
    std = float(np.std(valid, ddof=1)) if valid.size > 1 else 0.0
    return Summary(
        mean_gap=_nanmean(run_gaps),
        mean_slip=_nanmean(run_slips),
        gap_std=std,
        run_gaps=run_gaps,
        run_slips=run_slips,
        state_gap_series=series,
        new_best_states=new_best,
    )


@dataclass(frozen=True)
class TTest:
    t: float
    p: float
    df: int

    @property
    def p_below_floor(self) -> bool:
        return self.p < 1e-12


def t_tail(t: float, df: int) -> float:
    """Two-tailed Student-t tail probability via the regularised incomplete beta."""
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> TTest:
    """Two-sample unpaired Student t-test with pooled variance."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    na, nb = a.size, b.size
    df = na + nb - 2
    diff = a.mean() - b.mean()
    pooled = (((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum()) / df
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    if se == 0.0:
        if diff == 0.0:
            return TTest(0.0, 1.0, df)
        return TTest(math.copysign(math.inf, diff), 0.0, df)
    t = float(diff / se)
    return TTest(t, t_tail(t, df), df)


def convergence_curve(
    batches: Sequence[tuple[Sequence[RunRecord], Mapping[int, int]]],
    grid: int | Sequence[float] = 101,
    budget_mode: str = ITERATIONS,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Mean result gap against normalised in-state time.

    Every state of every record contributes one curve (best-so-far gap at
    each recorded iteration, time rescaled to [0, 1] by the state budget);
    curves are linearly interpolated onto ``grid`` and averaged. Before the
    first recorded point a curve holds its first value.
    """
    xs = np.linspace(0.0, 1.0, grid) if isinstance(grid, int) else np.asarray(grid, dtype=np.float64)
    total = np.zeros_like(xs)
    count = 0
    for records, best_known in batches:
        for rec in records:
            for res in rec.states:
                bk = best_known.get(res.state_index)
                if bk is None or res.iterations == 0:
                    continue
                t = res.normalized_times(budget_mode)
                g = np.array([result_gap(int(p), bk) for p in res.best_series])
                total += np.interp(xs, t, g)
                count += 1
    if count == 0:
        raise ValueError("no curves with best-known values")
    return xs, total / count


def state_curve(res, best_known: int, budget_mode: str = ITERATIONS) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Recorded (normalised time, gap) points of a single state."""
    t = res.normalized_times(budget_mode)
    return t, np.array([result_gap(int(p), best_known) for p in res.best_series])
