"""Time one construction batch on the numba kernel and on the numpy fallback.

    python3 benchmarks/bench_construct.py [--n 100] [--m 10] [--ants 64] [--repeat 20]
"""

import argparse
import time

import numpy as np

from herder import _accel
from herder.aco_core import AcoParams, iteration_uniforms
from herder.kernels import IMPACT_CODES, construct_batch
from herder.problem import heuristic, normalize_heuristic, random_mkp


def _time(fn, repeat):
    fn()  # warm-up / compile
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--ants", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    state = random_mkp(args.n, args.m, seed=0)
    eta = normalize_heuristic(heuristic(state))
    tau = np.random.default_rng(1).uniform(0.001, 1.0, args.n)
    p = AcoParams(ants_per_iteration=args.ants)
    u = iteration_uniforms(0, 0, 0, args.ants, args.n)

    def run(use_numba):
        return construct_batch(state.weights_f, state.capacities, state.profits, tau, eta, p.alpha, p.beta,
                               p.gamma, p.q0, IMPACT_CODES[p.impact], u, use_numba=use_numba)

    print(f"n={args.n} m={args.m} ants={args.ants} threads={_accel.set_threads(None)}")
    t_np = _time(lambda: run(False), max(1, args.repeat // 10))
    print(f"numpy  : {t_np * 1e3:9.2f} ms/batch")
    if _accel.USE_NUMBA:
        t_nb = _time(lambda: run(True), args.repeat)
        print(f"numba  : {t_nb * 1e3:9.2f} ms/batch  ({t_np / t_nb:.1f}x)")
        same = all(np.array_equal(a, b) for a, b in zip(run(True), run(False)))
        print(f"identical results: {same}")
    else:
        print("numba  : disabled (HERDER_DISABLE_NUMBA set or numba missing)")


if __name__ == "__main__":
    main()
