from __future__ import absolute_import
from __future__ import division

import math

import numpy as np

from vdpchain.exceptions import ConfigError, SimError
from vdpchain.lib import econ
from vdpchain.lib.adversary import (
    ADVERSARIES, _ForkEconomy, bfs_depth_times, bfs_path, long_range_trial, run_bfs_adversary,
    run_long_range, run_multi_fork_economics, sample_corrupted_stake,
)
from vdpchain.lib.sim import parse_sim_config, run_sim, trial_seeds
from vdpchain.lib.test_helpers import VdpTestCase, sim_config
from vdpchain.lib.test_runner import slow

class BfsTreeTest(VdpTestCase):
    def test_paths_match_depth_times(self):
        # type: () -> None
        run = bfs_depth_times(np.random.default_rng(1), 3, 0.25, 1.0, 16, 40.0, keep_paths=True)
        self.assertTrue(run.solver_bound_hit)
        self.assertGreater(len(run.depth_times), 3)
        self.assertTrue(np.all(np.diff(run.depth_times) >= 0))
        self.assertTrue(np.all(run.depth_times <= 40.0))
        for depth in range(1, len(run.depth_times) + 1):
            path = bfs_path(run, depth)
            self.assertEqual(len(path), depth)
            self.assertTrue(all(0 <= slot < 3 for slot, _ in path))
            self.assertTrue(all(steps >= 1 for _, steps in path))
            self.assertEqual(sum(steps for _, steps in path), run.depth_times[depth - 1])

    def test_single_chain(self):
        # type: () -> None
        run = bfs_depth_times(np.random.default_rng(2), 1, 0.5, 2.0, 1, 30.0, keep_paths=True)
        self.assertFalse(run.solver_bound_hit)
        steps = [s for _, s in bfs_path(run, len(run.depth_times))]
        self.assertEqual(list(run.depth_times), list(np.cumsum(steps) / 2.0))

    def test_errors(self):
        # type: () -> None
        rng = np.random.default_rng(0)
        with self.assertRaises(SimError):
            bfs_depth_times(rng, 0, 0.5, 1.0, 4, 10.0)
        with self.assertRaises(SimError):
            bfs_depth_times(rng, 2, 0.5, 1.0, 0, 10.0)

    @slow(1.5, 'a few hundred private trees')
    def test_linear_chain_grows_at_lambda(self):
        # type: () -> None
        config = {'adversary': {'lambda_a': 1.0, 'branching_factor': 1},
                  'duration': 200, 'gamma': '1/20'}
        result = run_bfs_adversary(config, trial_seeds(4, 30))
        self.assertEqual(result['trials'], 30)
        self.assertEqual(result['solver_bound_hits'], 0)
        self.assert_within_sigma(result['mean_depth'], 200.0, math.sqrt(200.0 / 30), k=4)

    @slow(1.5, 'a few hundred private trees')
    def test_branching_tail(self):
        # type: () -> None
        config = self.fixture_data('sim_bfs_tail.json')
        result = run_bfs_adversary(config, trial_seeds(config['rng_seed'], config['trials']))
        T = result['T']
        self.assertGreater(result['mean_depth'], T)
        self.assertTrue(all(d <= math.e * T + 5 for d in result['depths']))

    @slow(8.0, 'a thousand branching private trees')
    def test_depth_tail_bound(self):
        # type: () -> None
        config = {'adversary': {'lambda_a': 1.0, 'branching_factor': 4},
                  'duration': 50, 'gamma': '1/20'}
        result = run_bfs_adversary(config, trial_seeds(21, 1000))
        depths = np.asarray(result['depths'])
        for x in (1, 2, 3):
            p = float(np.mean(depths > math.e * 50 + x))
            sigma = math.sqrt(p * (1 - p) / len(depths))
            self.assertLessEqual(p, math.exp(-x) + 3 * sigma)

class LongRangeTest(VdpTestCase):
    def params(self, **changes):
        # type: (**object) -> dict
        params = {'lambda_h': 1.0, 'alpha_h': 0.9, 'depth': 10, 'horizon': 200,
                  'branching_factor': 4, 'solver_count': 64}
        params.update(changes)
        return params

    def test_corrupted_stake(self):
        # type: () -> None
        rng = np.random.default_rng(3)
        self.assertAlmostEqual(sample_corrupted_stake(rng, 0.9, 0.0, 10, 100), 0.1)
        self.assertEqual(sample_corrupted_stake(rng, 0.9, 1.0, 10, 100), 1.0)
        draws = sample_corrupted_stake(rng, 0.9, 0.01, 10, 100, size=2000)
        self.assertEqual(draws.shape, (2000,))
        self.assert_within_sigma(float(draws.mean()), 0.19, 0.0283 / math.sqrt(2000), k=4)

    def test_corrupted_stake_grid(self):
        # type: () -> None
        rng = np.random.default_rng(5)
        # (alpha_h, p_s, depth, validators)
        grid = [(0.9, 0.001, 50, 100), (0.9, 0.01, 10, 100), (0.8, 0.002, 100, 50),
                (0.95, 0.005, 40, 200), (0.7, 0.0005, 400, 100)]
        for alpha_h, p_s, depth, validators in grid:
            expected = p_s * depth * alpha_h + (1 - alpha_h)
            draws = sample_corrupted_stake(rng, alpha_h, p_s, depth, validators, size=20000)
            self.assertLessEqual(abs(float(draws.mean()) - expected), 0.02 * expected,
                                 (alpha_h, p_s, depth, validators))
        self.assertAlmostEqual(sample_corrupted_stake(rng, 0.9, 0.5, 0, 100), 0.1)

    def test_no_stake_never_catches_up(self):
        # type: () -> None
        outcome = long_range_trial(np.random.default_rng(0), self.params(acquired_stake=0.0))
        self.assertFalse(outcome.caught_up)
        self.assertIsNone(outcome.time_to_overtake)

    def test_full_stake_catches_up(self):
        # type: () -> None
        for seed in range(5):
            outcome = long_range_trial(np.random.default_rng(seed),
                                       self.params(acquired_stake=0.9))
            self.assertTrue(outcome.caught_up)
            self.assertEqual(outcome.lambda_a, 1.0)
            self.assertLess(outcome.time_to_overtake, 200)

    def test_small_stake_falls_behind(self):
        # type: () -> None
        for seed in range(5):
            outcome = long_range_trial(np.random.default_rng(seed),
                                       self.params(acquired_stake=0.05))
            self.assertFalse(outcome.caught_up)

    def test_fixture(self):
        # type: () -> None
        config = self.fixture_data('sim_long_range.json')
        result = run_long_range(config, trial_seeds(config['rng_seed'], config['trials']))
        self.assertEqual(result['trials'], 20)
        self.assertEqual(len(result['outcomes']), 20)
        self.assertEqual(result['caught_up'],
                         sum(1 for o in result['outcomes'] if o['caught_up']))
        self.assertTrue(0.09 < result['mean_adversary_stake'] <= 1.0)

class ForkEconomyTest(VdpTestCase):
    def setUp(self):
        # type: () -> None
        self.scenario = econ.ForkScenario.from_dict(
            self.fixture_data('econ_two_forks.json')['scenario'])

    def check_realized(self, scenario):
        # type: (econ.ForkScenario) -> None
        economy = _ForkEconomy(scenario, 2)
        strategies = [econ.ALL_FORKS] + list(range(1, len(scenario.forks) + 1))
        for strategy in strategies:
            outcomes = econ.enumerate_outcomes(scenario, strategy)
            for outcome in outcomes:
                self.assertEqual(economy.realized_reward(strategy, outcome.winner),
                                 outcome.reward, (strategy, outcome.winner))

    def test_realized_rewards_match_accounting(self):
        # type: () -> None
        self.check_realized(self.scenario)

    def test_published_blocks(self):
        # type: () -> None
        self.check_realized(econ.ForkScenario.make(
            [('1/2', 1, 2), ('1/4', 2, 1), ('1/4', 0, 3)], 100, '1/20'))

    @slow(2.0, 'replays every strategy against forty draws')
    def test_sampled_means(self):
        # type: () -> None
        config = self.fixture_data('sim_multi_fork.json')
        seeds = trial_seeds(config['rng_seed'], config['trials'])
        result = run_multi_fork_economics(config, seeds)
        self.assertEqual(result['trials'], 40)
        strategies = result['strategies']
        self.assertEqual(sorted(strategies), ['all_forks', 'honest', 'single(1)', 'single(2)'])
        self.assertEqual(strategies['all_forks']['expected'], 80.0)
        self.assertEqual(strategies['single(1)']['expected'], 240.0)
        self.assertEqual(strategies['honest'], strategies['single(1)'])

        winners = [int(np.random.default_rng(seed).choice(2, p=[0.7, 0.3])) + 1
                   for seed in seeds]
        wins = winners.count(1)
        self.assertAlmostEqual(strategies['single(1)']['mean'],
                               (600.0 * wins - 600.0 * (40 - wins)) / 40)
        for name, row in strategies.items():
            self.assertLessEqual(abs(row['mean'] - row['expected']), 4 * row['stderr'] + 1e-9,
                                 name)

    def test_honest_beats_all_forks(self):
        # type: () -> None
        config = self.fixture_data('sim_multi_fork.json')
        result = run_multi_fork_economics(config, trial_seeds(config['rng_seed'], 1000))
        self.assertEqual(result['trials'], 1000)
        self.assertEqual(result['honest_fork'], 1)
        strategies = result['strategies']
        self.assertGreaterEqual(strategies['honest']['mean'], strategies['all_forks']['mean'])
        self.assertGreaterEqual(strategies['honest']['expected'],
                                strategies['all_forks']['expected'])

    def test_honest_follows_the_longest_fork(self):
        # type: () -> None
        config = {'kappa_con': 2, 'scenario': {
            'forks': [{'win_prob': '3/10', 'published': 2, 'prospective': 4},
                      {'win_prob': '7/10', 'published': 0, 'prospective': 6}],
            'block_reward': 100, 'epsilon': '1/100'}}
        result = run_multi_fork_economics(config, trial_seeds(6, 10))
        self.assertEqual(result['honest_fork'], 1)
        strategies = result['strategies']
        self.assertEqual(strategies['honest'], strategies['single(1)'])
        self.assertEqual(strategies['honest']['expected'], -240.0)
        self.assertEqual(strategies['single(2)']['expected'], 160.0)
        self.assertEqual(strategies['all_forks']['expected'], 0.0)

class InLoopAdversaryTest(VdpTestCase):
    def test_registry(self):
        # type: () -> None
        self.assertEqual(sorted(ADVERSARIES), ['bfs_private_tree', 'multi_fork'])

    def test_config_errors(self):
        # type: () -> None
        mixed = [('1/2', 1.0, True), ('1/2', 1.0, False)]
        with self.assertRaises(ConfigError):
            run_sim(parse_sim_config(sim_config(mixed, adversary={'kind': 'long_range'})))
        with self.assertRaises(ConfigError):
            run_sim(parse_sim_config(sim_config(mixed, adversary={'kind': 'bfs_private_tree',
                                                                  'branching_factor': 2})))
        with self.assertRaises(ConfigError):
            run_sim(parse_sim_config(sim_config(adversary={'kind': 'multi_fork'})))
        with self.assertRaises(ConfigError):
            run_sim(parse_sim_config(sim_config(mixed, adversary={'kind': 'multi_fork',
                                                                  'forks': 0})))
        with self.assertRaises(ConfigError):
            parse_sim_config(sim_config(mixed, mode='real', adversary={'kind': 'multi_fork'}))

    def test_bfs_overtakes_weak_honest_chain(self):
        # type: () -> None
        validators = [('1/2', 1.0, True)] + [('1/8', 1.0, False)] * 4
        config = parse_sim_config(sim_config(
            validators, duration=200,
            adversary={'kind': 'bfs_private_tree', 'branching_factor': 4, 'solver_count': 64}))
        report, _ = run_sim(config)
        self.assertTrue(report.success)
        self.assertGreater(sum(report.published_counts[1:]), 0)
        self.assertEqual(report.conservation_checks, sum(report.published_counts) + 1)

    def test_multi_fork_gets_slashed(self):
        # type: () -> None
        validators = [('1/2', 1.0, True), ('1/2', 1.0, False)]
        config = parse_sim_config(sim_config(validators, duration=400,
                                             adversary={'kind': 'multi_fork', 'forks': 2}))
        report, _ = run_sim(config)
        self.assertGreater(report.equivocations_injected, 0)
        self.assertEqual(report.equivocations_detected, report.equivocations_injected)
        self.assertGreater(report.slashing_events, 0)
        self.assertGreater(report.slashed_total, 0)
        self.assertEqual(report.conservation_checks, sum(report.published_counts) + 1)

    def test_strong_private_tree_breaks_common_prefix(self):
        # type: () -> None
        validators = [('1/2', 1.0, True)] + [('1/8', 1.0, False)] * 4
        config = parse_sim_config(sim_config(
            validators, duration=1000, sample_points=1000, common_prefix_k=0, kappa_con=1,
            adversary={'kind': 'bfs_private_tree', 'branching_factor': 4, 'solver_count': 64}))
        report, _ = run_sim(config)
        self.assertGreater(report.common_prefix_k, 0)
        self.assertGreater(report.common_prefix_violations, 0)
        self.assertLess(report.chain_quality, 1.0)

    @slow(180.0, 'a hundred thousand blocks against an equivocating proposer')
    def test_weak_equivocator_keeps_backbone_properties(self):
        # type: () -> None
        validators = [('4/5', 1000.0, True), ('1/5', 1000.0, False)]
        config = parse_sim_config(sim_config(
            validators, gamma='1/8192', duration=205000, round_delta=0, sample_points=200,
            quality_window=100, common_prefix_k=50, kappa_con=6,
            adversary={'kind': 'multi_fork', 'forks': 2}))
        report, _ = run_sim(config)
        self.assertGreaterEqual(report.final_height, 90000)
        self.assertGreater(report.chain_quality, 0)
        self.assertEqual(report.common_prefix_violations, 0)
        self.assertLessEqual(report.common_prefix_k, 50)
        self.assertEqual(report.confirmed_reversions, 0)
        self.assertGreater(report.equivocations_injected, 0)
        self.assertEqual(report.equivocations_detected, report.equivocations_injected)
        self.assertEqual(report.conservation_checks, sum(report.published_counts) + 1)
