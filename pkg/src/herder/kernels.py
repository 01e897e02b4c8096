"""Ant solution construction kernels.

Two interchangeable implementations of the same loop:

* ``_construct_batch_jit`` - numba, one ``prange`` lane per ant.
* ``_construct_batch_numpy`` - plain numpy, vectorised over candidate items.

Both consume the same pre-drawn uniforms (two per construction step, row ``a``
belongs to ant ``a``) and follow the same arithmetic order, so for a given
input they pick the same items. :func:`construct_batch` dispatches on
``herder._accel.USE_NUMBA``.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import optional_njit, prange

EPS = 1e-9

IMPACT_RATIO = 0
IMPACT_NONE = 1
IMPACT_CODES = {"capacity-ratio": IMPACT_RATIO, "none": IMPACT_NONE}


@optional_njit(cache=True)
def _ipow_inplace(x, p, out, base):
    # exponentiation by squaring; _ipow_vec replays the same multiplications
    n = x.shape[0]
    for i in range(n):
        base[i] = x[i]
        out[i] = 1.0
    while p > 0:
        if p & 1:
            for i in range(n):
                out[i] *= base[i]
        for i in range(n):
            base[i] *= base[i]
        p >>= 1


def _ipow_vec(x, p):
    result = np.ones_like(x)
    base = x.copy()
    while p > 0:
        if p & 1:
            result *= base
        base *= base
        p >>= 1
    return result


@optional_njit(cache=True)
def _construct_one(a, wkm, caps, profits, tau_pow, log_tau, eta_pow, log_eta, alpha, beta, gamma, gamma_int,
                   q0, use_impact, uniforms, picks):
    m, n = wkm.shape
    inv_m = 1.0 / m
    remaining = caps.copy()
    alive = np.ones(n, dtype=np.bool_)
    base_score = tau_pow * eta_pow
    cost = np.empty(n)
    ratio = np.empty(n)
    powr = np.empty(n)
    sq = np.empty(n)
    score = np.empty(n)
    total = 0
    step = 0
    while True:
        # every pass runs over all n items so the loops vectorise; dead items score 0
        for i in range(n):
            cost[i] = 0.0
        for k in range(m):
            r = remaining[k]
            inv = 1.0 / (r if r > EPS else EPS)
            row = wkm[k]
            for i in range(n):
                w = row[i]
                if w > r:
                    alive[i] = False
                cost[i] += w * inv
        if use_impact:
            for i in range(n):
                c = cost[i] * inv_m
                ratio[i] = profits[i] / (c if c > EPS else EPS)
            if gamma_int >= 0:
                _ipow_inplace(ratio, gamma_int, powr, sq)
            else:
                for i in range(n):
                    powr[i] = ratio[i] ** gamma
        else:
            for i in range(n):
                powr[i] = 1.0
        n_alive = 0
        total_score = 0.0
        for i in range(n):
            v = base_score[i] * powr[i] if alive[i] else 0.0
            score[i] = v
            total_score += v
            n_alive += alive[i]
        if n_alive == 0:
            break
        if total_score == 0.0 or not total_score < np.inf:
            # underflow/overflow: redo in log space, shifted by the max
            lmax = -np.inf
            for i in range(n):
                if alive[i]:
                    v = alpha * log_tau[i]
                    if beta != 0.0:
                        v += beta * log_eta[i]
                    if use_impact:
                        v += gamma * math.log(ratio[i]) if ratio[i] > 0.0 else -np.inf
                    score[i] = v
                    if v > lmax:
                        lmax = v
            total_score = 0.0
            for i in range(n):
                if alive[i]:
                    v = math.exp(score[i] - lmax) if lmax > -np.inf else 1.0
                    score[i] = v
                    total_score += v
                else:
                    score[i] = 0.0
        chosen = -1
        if uniforms[a, 2 * step] < q0:
            smax = -1.0
            for i in range(n):
                if alive[i] and score[i] > smax:
                    smax = score[i]
                    chosen = i
        else:
            target = uniforms[a, 2 * step + 1] * total_score
            acc = 0.0
            for i in range(n):
                if alive[i]:
                    chosen = i
                    acc += score[i]
                    if acc > target:
                        break
        picks[a, chosen] = 1
        alive[chosen] = False
        total += int(profits[chosen])
        for k in range(m):
            remaining[k] -= wkm[k, chosen]
        step += 1
        if n_alive == 1:
            break
    return total


@optional_njit(cache=True)
def _construct_batch_jit(wkm, caps, profits, tau_pow, log_tau, eta_pow, log_eta, alpha, beta, gamma, gamma_int, q0,
                         impact, uniforms):
    n_ants = uniforms.shape[0]
    n = wkm.shape[1]
    picks = np.zeros((n_ants, n), dtype=np.uint8)
    totals = np.zeros(n_ants, dtype=np.int64)
    use_impact = gamma != 0.0 and impact == 0
    for a in range(n_ants):
        totals[a] = _construct_one(a, wkm, caps, profits, tau_pow, log_tau, eta_pow, log_eta, alpha, beta, gamma,
                                   gamma_int, q0, use_impact, uniforms, picks)
    return picks, totals


@optional_njit(cache=True, parallel=True)
def _construct_batch_jit_parallel(wkm, caps, profits, tau_pow, log_tau, eta_pow, log_eta, alpha, beta, gamma,
                                  gamma_int, q0, impact, uniforms):
    n_ants = uniforms.shape[0]
    n = wkm.shape[1]
    picks = np.zeros((n_ants, n), dtype=np.uint8)
    totals = np.zeros(n_ants, dtype=np.int64)
    use_impact = gamma != 0.0 and impact == 0
    for a in prange(n_ants):
        totals[a] = _construct_one(a, wkm, caps, profits, tau_pow, log_tau, eta_pow, log_eta, alpha, beta, gamma,
                                   gamma_int, q0, use_impact, uniforms, picks)
    return picks, totals


def _construct_batch_numpy(wkm, caps, profits, tau_pow, log_tau, eta_pow, log_eta, alpha, beta, gamma, gamma_int, q0,
                           impact, uniforms):
    n_ants = uniforms.shape[0]
    m, n = wkm.shape
    picks = np.zeros((n_ants, n), dtype=np.uint8)
    totals = np.zeros(n_ants, dtype=np.int64)
    use_impact = gamma != 0.0 and impact == IMPACT_RATIO
    for a in range(n_ants):
        remaining = caps.copy()
        alive = np.ones(n, dtype=bool)
        step = 0
        total = 0
        while True:
            inv = 1.0 / np.where(remaining > EPS, remaining, EPS)
            cost = np.zeros(n)
            for k in range(m):
                cost += wkm[k] * inv[k]
            alive &= (wkm <= remaining[:, None]).all(axis=0)
            cand = np.flatnonzero(alive)
            if cand.size == 0:
                break
            ratio = profits[cand] / np.maximum(cost[cand] * (1.0 / m), EPS)
            score = tau_pow[cand] * eta_pow[cand]
            if use_impact:
                # overflow is caught by the log-space branch below
                with np.errstate(over="ignore"):
                    score = score * (_ipow_vec(ratio, gamma_int) if gamma_int >= 0 else ratio**gamma)
            cum = np.cumsum(score)
            if cum[-1] == 0.0 or not cum[-1] < np.inf:
                with np.errstate(divide="ignore"):
                    logs = alpha * log_tau[cand]
                    if beta != 0.0:
                        logs = logs + beta * log_eta[cand]
                    if use_impact:
                        logs = logs + np.where(ratio > 0.0, gamma * np.log(ratio), -np.inf)
                lmax = logs.max()
                score = np.exp(logs - lmax) if lmax > -np.inf else np.ones(cand.size)
                cum = np.cumsum(score)
            if uniforms[a, 2 * step] < q0:
                chosen = cand[int(np.argmax(score))]
            else:
                hit = np.flatnonzero(cum > uniforms[a, 2 * step + 1] * cum[-1])
                chosen = cand[int(hit[0]) if hit.size else cand.size - 1]
            picks[a, chosen] = 1
            alive[chosen] = False
            total += int(profits[chosen])
            remaining = remaining - wkm[:, chosen]
            step += 1
        totals[a] = total
    return picks, totals


def construct_batch(wkm, caps, profits, tau, eta, alpha, beta, gamma, q0, impact, uniforms, use_numba=None):
    """Build one solution per row of ``uniforms``.

    ``wkm`` is the knapsack-major float weight matrix ``(m, n)``; ``uniforms`` must have
    ``2 * n`` columns. Returns ``(picks, profits)`` with ``picks`` as a uint8
    ``(ants, n)`` array.
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba and _accel.USE_NUMBA:
        fn = _construct_batch_jit_parallel if _accel.parallel_enabled() else _construct_batch_jit
    else:
        fn = _construct_batch_numpy
    tau = np.asarray(tau, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    alpha, beta, gamma = float(alpha), float(beta), float(gamma)
    gamma_int = int(gamma) if gamma.is_integer() and 0.0 <= gamma <= 64.0 else -1
    with np.errstate(divide="ignore"):
        log_tau = np.log(tau)
        log_eta = np.log(eta)
    tau_pow = tau if alpha == 1.0 else tau**alpha
    eta_pow = np.ones_like(eta) if beta == 0.0 else eta**beta
    return fn(
        wkm,
        np.asarray(caps, dtype=np.float64),
        np.asarray(profits, dtype=np.float64),
        tau_pow,
        log_tau,
        eta_pow,
        log_eta,
        alpha,
        beta,
        gamma,
        gamma_int,
        float(q0),
        int(impact),
        uniforms,
    )


def warm_up() -> float:
    """Compile (or load from cache) the construction kernels; returns seconds spent."""
    import time

    t = time.perf_counter()
    u = np.full((1, 4), 0.5)
    # states and pheromone fields hand the kernel read-only arrays: a separate specialisation
    for frozen in (True, False):
        arrays = [np.ones((1, 2)), np.array([1]), np.array([1, 2]), np.ones(2)]
        for a in arrays:
            a.setflags(write=not frozen)
        for gamma in (8.0, 8.5):
            construct_batch(*arrays, np.ones(2), 1.0, 0.0, gamma, 0.0, IMPACT_RATIO, u)
    return time.perf_counter() - t
