"""Centralized stage game: action sets, reduction equivalence, policies."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jamauction import matgame, pcgame


def _random_cube(seed: int, n: int = 3, m: int = 2) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(n, m, m))


def _two_candidate_cube() -> np.ndarray:
    cube = np.zeros((3, 2, 2))
    cube[0, 1, 0] = 5.0  # jam on 0: SU0 shines on channel 1
    cube[1, 0, 0] = 2.0
    cube[2, 0, 1] = 4.0  # jam on 1: SU2 shines on channel 0
    cube[1, 1, 1] = 3.0
    return cube


def _symmetric_cube() -> np.ndarray:
    cube = np.zeros((2, 2, 2))
    cube[0, 0, 1] = 2.0
    cube[0, 1, 0] = 2.0
    cube[1, 0, 1] = 1.0
    cube[1, 1, 0] = 1.0
    return cube


class TestBuildFullGame:
    def test_two_by_two_enumeration(self):
        cube = _random_cube(0, n=2, m=2)
        aset = pcgame.build_full_game(cube, (0, 1), (0, 1))
        assert len(aset.allocations) == 2
        pairs = {a.pairs for a in aset.allocations}
        assert pairs == {((0, 0), (1, 1)), ((0, 1), (1, 0))}
        for row, alloc in zip(aset.payoff, aset.allocations):
            for k in range(2):
                expected = sum(cube[s, c, k] for s, c in alloc.pairs)
                assert row[k] == pytest.approx(expected, abs=1e-12)

    def test_three_sus_two_channels_count(self):
        aset = pcgame.build_full_game(_random_cube(1), (0, 1), (0, 1, 2))
        assert len(aset.allocations) == 6

    def test_constant_bids_value(self):
        cube = np.full((3, 2, 2), 1.5)
        aset = pcgame.build_full_game(cube, (0, 1), (0, 1, 2))
        np.testing.assert_allclose(aset.payoff, 3.0, atol=1e-12)
        assert matgame.solve(aset.payoff).value == pytest.approx(3.0, abs=1e-9)

    def test_guard_rejects_factorial_blowup(self):
        cube = np.zeros((12, 6, 6))
        with pytest.raises(ValueError, match="candidate_allocations"):
            pcgame.build_full_game(cube, tuple(range(6)), tuple(range(12)))

    def test_rejects_bad_cubes(self):
        with pytest.raises(ValueError):
            pcgame.build_full_game(np.zeros((2, 2, 2)), (), (0, 1))
        with pytest.raises(ValueError):
            pcgame.build_full_game(np.zeros((2, 2, 2)), (0, 1), ())
        with pytest.raises(ValueError):
            pcgame.build_full_game(np.zeros((2, 2)), (0, 1), (0, 1))
        with pytest.raises(ValueError):
            pcgame.build_full_game(-np.ones((2, 2, 2)), (0, 1), (0, 1))


class TestCandidateAllocations:
    def test_jam_invariant_bids_yield_single_candidate(self):
        cube = np.ones((3, 2, 2))
        aset = pcgame.candidate_allocations(cube, (0, 1), (0, 1, 2))
        assert len(aset.allocations) == 1
        assert matgame.solve(aset.payoff).value == pytest.approx(2.0, abs=1e-9)

    def test_distinct_optima_per_jam_hypothesis(self):
        aset = pcgame.candidate_allocations(_two_candidate_cube(), (0, 1), (0, 1, 2))
        assert len(aset.allocations) == 2

    def test_never_more_candidates_than_idle_channels(self):
        for seed in range(30):
            aset = pcgame.candidate_allocations(_random_cube(seed), (0, 1), (0, 1, 2))
            assert len(aset.allocations) <= 2

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_reduced_game_keeps_the_full_value(self, seed):
        cube = _random_cube(seed)
        idle, sus = (0, 1), (0, 1, 2)
        reduced = matgame.solve(pcgame.candidate_allocations(cube, idle, sus).payoff)
        full = matgame.solve(pcgame.build_full_game(cube, idle, sus).payoff)
        assert reduced.value == pytest.approx(full.value, abs=1e-6)

    def test_three_channel_instances_match_too(self):
        for seed in range(10):
            cube = _random_cube(seed, n=4, m=3)
            idle, sus = (0, 1, 2), (0, 1, 2, 3)
            reduced = matgame.solve(pcgame.candidate_allocations(cube, idle, sus).payoff)
            full = matgame.solve(pcgame.build_full_game(cube, idle, sus).payoff)
            assert reduced.value == pytest.approx(full.value, abs=1e-6)
            assert len(pcgame.candidate_allocations(cube, idle, sus).allocations) <= 3


class TestSolveStage:
    def test_single_idle_channel(self):
        cube = np.zeros((2, 1, 1))
        cube[0, 0, 0] = 3.0
        cube[1, 0, 0] = 1.0
        solution = pcgame.solve_stage(cube, (0,), (0, 1))
        assert solution.value == pytest.approx(3.0, abs=1e-9)
        assert solution.coordinator.allocations[0].pairs == ((0, 0),)
        np.testing.assert_allclose(solution.coordinator.probs, [1.0], atol=1e-9)
        np.testing.assert_allclose(solution.jammer.probs, [1.0], atol=1e-9)

    def test_symmetric_instance_jammer_mixes_evenly(self):
        solution = pcgame.solve_stage(_symmetric_cube(), (0, 1), (0, 1))
        np.testing.assert_allclose(solution.jammer.probs, [0.5, 0.5], atol=1e-9)
        assert solution.value == pytest.approx(1.5, abs=1e-9)

    def test_exact_mode_agrees_and_reports(self):
        for seed in range(10):
            cube = _random_cube(seed)
            reduced = pcgame.solve_stage(cube, (0, 1), (0, 1, 2), mode="reduced")
            exact = pcgame.solve_stage(cube, (0, 1), (0, 1, 2), mode="exact")
            assert reduced.value == pytest.approx(exact.value, abs=1e-6)
            assert reduced.report is None
            assert exact.report is not None

    def test_constant_cube_reports_affine_degeneracy(self):
        solution = pcgame.solve_stage(np.ones((3, 2, 2)), (0, 1), (0, 1, 2), mode="exact")
        assert solution.report is not None
        assert solution.report.degenerate
        assert solution.value == pytest.approx(2.0, abs=1e-9)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            pcgame.solve_stage(np.ones((2, 2, 2)), (0, 1), (0, 1), mode="fast")

    def test_marginals_match_the_mixture(self):
        solution = pcgame.solve_stage(_random_cube(42), (0, 1), (0, 1, 2))
        policy = solution.coordinator
        marginals = policy.marginals((0, 1, 2), (0, 1))
        expected = np.zeros((3, 2))
        for alloc, p in zip(policy.allocations, policy.probs):
            for s, c in alloc.pairs:
                expected[s, c] += p
        np.testing.assert_allclose(marginals, expected, atol=1e-12)
        assert marginals.sum(axis=0).max() <= 1.0 + 1e-9

    def test_minimax_policy_guarantees_value_against_any_jammer(self):
        rng = np.random.default_rng(0)
        for seed in range(20):
            cube = _random_cube(seed)
            solution = pcgame.solve_stage(cube, (0, 1), (0, 1, 2))
            payoff = solution.action_set.payoff
            p1 = solution.coordinator.probs
            for _ in range(20):
                q = rng.dirichlet(np.ones(payoff.shape[1]))
                assert p1 @ payoff @ q >= solution.value - 1e-9


class TestSampling:
    def test_degenerate_policy_always_returns_its_action(self):
        solution = pcgame.solve_stage(np.ones((3, 2, 2)), (0, 1), (0, 1, 2))
        rng = np.random.default_rng(0)
        allocs = {pcgame.sample_allocation(solution.coordinator, rng).pairs for _ in range(50)}
        assert len(allocs) == 1

    def test_even_mixture_sampling_frequencies(self):
        solution = pcgame.solve_stage(_symmetric_cube(), (0, 1), (0, 1))
        rng = np.random.default_rng(1)
        draws = 10_000
        count = sum(
            pcgame.sample_jam(solution.jammer, rng) == 0 for _ in range(draws)
        )
        assert count / draws == pytest.approx(0.5, abs=0.02)

    def test_sampled_allocation_marginals_match_analytic(self):
        cube = _two_candidate_cube()
        solution = pcgame.solve_stage(cube, (0, 1), (0, 1, 2))
        rng = np.random.default_rng(2)
        draws = 10_000
        freq = np.zeros((3, 2))
        for _ in range(draws):
            alloc = pcgame.sample_allocation(solution.coordinator, rng)
            for s, c in alloc.pairs:
                freq[s, c] += 1.0
        freq /= draws
        analytic = solution.coordinator.marginals((0, 1, 2), (0, 1))
        assert np.abs(freq - analytic).sum() < 0.03

    def test_realized_average_payoff_reaches_the_value(self):
        cube = _random_cube(123)
        solution = pcgame.solve_stage(cube, (0, 1), (0, 1, 2))
        payoff = solution.action_set.payoff
        rng = np.random.default_rng(3)
        draws = 10_000
        samples = np.empty(draws)
        for i in range(draws):
            row = pcgame.sample_allocation(solution.coordinator, rng)
            l = solution.coordinator.allocations.index(row)
            k = solution.action_set.idle.index(pcgame.sample_jam(solution.jammer, rng))
            samples[i] = payoff[l, k]
        stderr = samples.std(ddof=1) / np.sqrt(draws)
        assert samples.mean() >= solution.value - 3.0 * stderr - 1e-9
