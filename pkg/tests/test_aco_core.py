import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herder import kernels
from herder.aco_core import (
    AcoParams,
    PheromoneField,
    construct_batch_for,
    construct_solution,
    deposit,
    evaporate,
    iteration_uniforms,
    run_iteration,
)
from herder.problem import MkpState, Solution, heuristic, is_feasible, normalize_heuristic, random_mkp


def eta_of(state):
    return normalize_heuristic(heuristic(state))


class TestConstruct:
    def test_nothing_fits(self, rng):
        s = MkpState(0, [5, 6], [[10, 12]], [3])
        sol = construct_solution(s, PheromoneField.uniform(2), eta_of(s), AcoParams(ants_per_iteration=1), rng)
        assert sol.profit == 0 and not sol.picks.any()

    def test_greedy_prefers_higher_impact(self, rng):
        # both items weigh 5 in a knapsack of 5; item 2 has the larger profit and so the larger impact
        s = MkpState(0, [10, 20], [[5, 5]], [5])
        sol = construct_solution(s, PheromoneField.uniform(2), eta_of(s), AcoParams(q0=1.0), rng)
        assert sol.picks.tolist() == [False, True] and sol.profit == 20

    @pytest.mark.parametrize("params", [AcoParams(q0=0.0), AcoParams(q0=0.0, gamma=0.0)])
    def test_equal_scores_give_uniform_roulette(self, params):
        # five identical items, only one fits: the first pick is a pure roulette draw
        s = MkpState(0, [7] * 5, [[3] * 5], [3])
        draws = 100_000
        u = np.random.default_rng(2024).random((draws, 2 * s.n))
        picks, _ = construct_batch_for(s, PheromoneField.uniform(5), eta_of(s), params, u)
        counts = picks.sum(axis=0)
        assert counts.sum() == draws
        p = 1 / 5
        sigma = np.sqrt(draws * p * (1 - p))
        assert (np.abs(counts - draws * p) <= 3 * sigma).all()

    def test_uniform_random_packing_without_guidance(self):
        # beta = gamma = 0 and uniform tau: every feasible item is equally likely at each step
        s = MkpState(0, [1, 100, 1000, 5], [[1, 2, 3, 4]], [4])
        u = np.random.default_rng(1).random((60_000, 8))
        picks, _ = construct_batch_for(s, PheromoneField.uniform(4), eta_of(s), AcoParams(gamma=0.0, q0=0.0), u)
        # first draw happens among all 4 items; item 3 (weight 4) can only be picked first
        freq_item3 = picks[:, 3].mean()
        assert abs(freq_item3 - 0.25) < 3 * np.sqrt(0.25 * 0.75 / 60_000)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 25), st.integers(1, 4), st.floats(0.0, 1.0))
    def test_solutions_are_feasible_and_maximal(self, seed, n, m, q0):
        s = random_mkp(n, m, seed=seed, tightness=0.4)
        tau = np.random.default_rng(seed).uniform(0.001, 1.0, n)
        u = np.random.default_rng(seed + 1).random((8, 2 * n))
        picks, profits = construct_batch_for(s, PheromoneField(tau), eta_of(s), AcoParams(q0=q0), u)
        for x, p in zip(picks, profits):
            ok, loads = is_feasible(s, x)
            assert ok
            assert p == int(s.profits[x.astype(bool)].sum())
            # construction stops only when nothing else fits
            rest = np.flatnonzero(x == 0)
            assert not any((s.weights[:, i] + loads <= s.capacities).all() for i in rest)

    def test_extreme_impacts_do_not_break_roulette(self):
        # huge gamma underflows every direct score; the log-space path must still pick an item
        s = random_mkp(20, 3, seed=8)
        u = np.random.default_rng(3).random((4, 40))
        picks, profits = construct_batch_for(s, PheromoneField(np.full(20, 0.001)), eta_of(s), AcoParams(gamma=500.0, q0=0.0), u)
        assert (profits > 0).all()

    def test_dimension_mismatch(self, small_state, rng):
        with pytest.raises(ValueError):
            construct_solution(small_state, PheromoneField.uniform(3), eta_of(small_state), AcoParams(), rng)


class TestKernelPaths:
    @pytest.mark.parametrize("seed", range(6))
    def test_numba_and_numpy_agree(self, seed):
        s = random_mkp(40, 5, seed=seed)
        tau = np.random.default_rng(seed).uniform(0.001, 1.0, 40)
        u = np.random.default_rng(100 + seed).random((16, 80))
        eta = eta_of(s)
        for params in (AcoParams(), AcoParams(beta=1.0, gamma=2.5, q0=0.3), AcoParams(impact="none")):
            args = (s.weights_f, s.capacities, s.profits, tau, eta, params.alpha, params.beta, params.gamma,
                    params.q0, kernels.IMPACT_CODES[params.impact], u)
            p1, t1 = kernels.construct_batch(*args, use_numba=True)
            p2, t2 = kernels.construct_batch(*args, use_numba=False)
            np.testing.assert_array_equal(p1, p2)
            np.testing.assert_array_equal(t1, t2)

    def test_parallel_kernel_matches_serial(self):
        s = random_mkp(30, 4, seed=1)
        u = np.random.default_rng(0).random((12, 60))
        args = (s.weights_f, s.capacities.astype(float), s.profits.astype(float), np.ones(30), np.ones(30),
                np.ones(30), np.zeros(30), 1.0, 0.0, 8.0, 8, 0.01, 0, u)
        p1, t1 = kernels._construct_batch_jit(*args)
        p2, t2 = kernels._construct_batch_jit_parallel(*args)
        np.testing.assert_array_equal(p1, p2)
        np.testing.assert_array_equal(t1, t2)


class TestPheromoneUpdate:
    def test_evaporate(self):
        f = evaporate(PheromoneField([1.0]), 0.1)
        assert f.tau[0] == pytest.approx(0.9, abs=1e-12)

    def test_evaporate_floor(self):
        assert evaporate(PheromoneField([0.001]), 0.1).tau[0] == 0.001

    def test_evaporate_clamps_honeydew_overshoot(self):
        assert evaporate(PheromoneField([2.0]), 0.1).tau[0] == 1.0

    def test_evaporate_rejects_bad_rho(self):
        with pytest.raises(ValueError):
            evaporate(PheromoneField([1.0]), 1.0)

    def test_deposit(self):
        s = MkpState(0, [1, 1], [[1, 1]], [2])
        best = Solution.from_picks(s, [1, 0])
        f = deposit(PheromoneField([0.9, 0.5]), best, 0.1, 1.0)
        assert f.tau[0] == pytest.approx(1.0, abs=1e-12)
        assert f.tau[1] == 0.5

    def test_deposit_clamps(self):
        s = MkpState(0, [1], [[1]], [2])
        f = deposit(PheromoneField([0.99]), Solution.from_picks(s, [1]), 0.1, 1.0)
        assert f.tau[0] == 1.0

    def test_fields_are_not_mutated(self):
        f = PheromoneField([0.5, 0.5])
        evaporate(f, 0.5)
        assert f.tau.tolist() == [0.5, 0.5]


class TestIteration:
    def test_single_ant(self, small_state):
        params = AcoParams(ants_per_iteration=1)
        u = iteration_uniforms(1, 0, 0, 1, small_state.n)
        res = run_iteration(small_state, PheromoneField.uniform(small_state.n), eta_of(small_state), params, u)
        alone = construct_batch_for(small_state, PheromoneField.uniform(small_state.n), eta_of(small_state), params, u)
        assert res.best.profit == int(alone[1][0])
        np.testing.assert_array_equal(res.best.picks, alone[0][0].astype(bool))

    def test_best_beats_median(self, small_state):
        params = AcoParams(ants_per_iteration=32)
        f = PheromoneField.uniform(small_state.n)
        eta = eta_of(small_state)
        wins = 0
        for it in range(100):
            res = run_iteration(small_state, f, eta, params, iteration_uniforms(5, 0, it, 32, small_state.n))
            wins += res.best.profit >= np.median(res.ant_profits)
            f = res.pheromone
        assert wins >= 99

    def test_bounds_hold_after_every_iteration(self, small_state):
        params = AcoParams(ants_per_iteration=8)
        f = PheromoneField(np.full(small_state.n, 3.0))
        eta = eta_of(small_state)
        for it in range(50):
            f = run_iteration(small_state, f, eta, params, iteration_uniforms(0, 0, it, 8, small_state.n)).pheromone
            assert f.within_bounds()

    def test_uniform_block_is_keyed(self):
        a = iteration_uniforms(1, 2, 3, 4, 5)
        assert a.shape == (4, 10)
        np.testing.assert_array_equal(a, iteration_uniforms(1, 2, 3, 4, 5))
        assert not np.array_equal(a, iteration_uniforms(1, 2, 4, 4, 5))

    def test_ant_count_mismatch(self, small_state):
        with pytest.raises(ValueError):
            run_iteration(small_state, PheromoneField.uniform(small_state.n), eta_of(small_state),
                          AcoParams(ants_per_iteration=2), iteration_uniforms(0, 0, 0, 3, small_state.n))


def test_params_validation():
    with pytest.raises(ValueError):
        AcoParams(rho=0.0)
    with pytest.raises(ValueError):
        AcoParams(q0=1.5)
    with pytest.raises(ValueError):
        AcoParams(ants_per_iteration=0)
    with pytest.raises(ValueError):
        AcoParams(impact="bogus")
