from __future__ import absolute_import
from __future__ import division

from typing import List, Tuple

import math
import os
import tempfile

import numpy as np
import scipy.stats
import ujson

from vdpchain.exceptions import ConfigError
from vdpchain.lib.sim import (
    BLOCK_PUBLISHED, FAST, REAL, SOLVE_COMPLETE, Simulation, parse_sim_config,
    replay_event_log, run_experiment, run_sim, run_trials, stake_units,
)
from vdpchain.lib.test_helpers import VdpTestCase, equal_validators, sim_config
from vdpchain.lib.test_runner import slow

class SimConfigTest(VdpTestCase):
    def test_defaults(self):
        # type: () -> None
        config = parse_sim_config(sim_config())
        self.assertEqual(config.mode, FAST)
        self.assertEqual(config.experiment, 'backbone')
        self.assertEqual(config.trials, 1)
        self.assertIsNone(config.adversary)
        self.assertEqual(len(config.honest_validators), 2)
        self.assertEqual(parse_sim_config(sim_config(mode='real_crypto')).mode, REAL)
        self.assertEqual(config.to_dict()['validators'][0]['stake_fraction'], '1/2')

    def test_stake_units(self):
        # type: () -> None
        config = parse_sim_config(sim_config([('1/2', 1.0, True), ('1/3', 1.0, True),
                                              ('1/6', 2.0, False)]))
        self.assertEqual(stake_units(config), 6)
        self.assertEqual(stake_units(parse_sim_config(sim_config(equal_validators(4)))), 4)

    def test_errors(self):
        # type: () -> None
        bad = [
            sim_config([('1/2', 1.0, True), ('1/3', 1.0, True)]),
            sim_config([]),
            sim_config([('0', 1.0, True), ('1', 1.0, True)]),
            sim_config([('1', 0.0, True)]),
            sim_config(gamma='0'),
            sim_config(gamma='3/2'),
            sim_config(mode='slow'),
            sim_config(duration=0),
            sim_config(experiment='mining'),
            sim_config([('1/5000', 1.0, True), ('4999/5000', 1.0, True)]),
        ]
        for raw in bad:
            with self.assertRaises(ConfigError):
                parse_sim_config(raw)
        with self.assertRaises(ConfigError):
            run_sim(parse_sim_config(sim_config([('1', 1.0, False)])))

class HonestSimulationTest(VdpTestCase):
    def setUp(self):
        # type: () -> None
        self.config = parse_sim_config(self.fixture_data('sim_small.json'))
        self.sim = Simulation(self.config)
        self.report = self.sim.run()

    def test_zero_latency_invariants(self):
        # type: () -> None
        report = self.report
        published = sum(report.published_counts)
        self.assertGreater(published, 0)
        self.assertEqual(report.orphaned_blocks, 0)
        self.assertEqual(report.final_height, published)
        self.assertEqual(report.honest_height_collisions, 0)
        self.assertEqual(report.equivocations_injected, 0)
        self.assertEqual(report.slashing_events, 0)
        self.assertEqual(report.conservation_checks, published + 1)
        self.assertEqual(report.confirmed_reversions, 0)
        self.assertEqual(report.common_prefix_violations, 0)
        self.assertEqual(report.chain_quality, 1.0)
        self.assertFalse(report.success)
        self.assertEqual(report.lambda_a, 0.0)
        self.assertAlmostEqual(report.lambda_h_expected, 0.1)
        self.assertAlmostEqual(sum(report.shares), 1.0)

    def test_trajectory(self):
        # type: () -> None
        trajectory = self.report.trajectory
        self.assertEqual(len(trajectory), 50)
        self.assertEqual(trajectory[0][0], 0.0)
        self.assertEqual(trajectory[-1][0], 4000.0)
        d_h = [row[1] for row in trajectory]
        self.assertEqual(d_h, sorted(d_h))
        self.assertEqual(d_h[-1], self.report.final_height)
        self.assertEqual(self.report.gap_samples, d_h)

    def test_honest_growth(self):
        # type: () -> None
        report = self.report
        self.assertGreaterEqual(report.final_height, 0.8 * report.lambda_h_expected * 4000)
        self.assertIsNotNone(report.growth_tau)

    def test_event_log(self):
        # type: () -> None
        log = self.sim.log
        counts = log.counts()
        self.assertEqual(counts[BLOCK_PUBLISHED], sum(self.report.published_counts))
        self.assertGreaterEqual(counts[SOLVE_COMPLETE], counts[BLOCK_PUBLISHED])
        times = [r[0] for r in log.records]
        self.assertEqual(times, sorted(times))
        replayed = replay_event_log(log, self.sim.store)
        self.assertEqual(replayed.tip, self.sim.tree.tip)
        self.assertEqual(len(replayed), len(self.sim.tree))

        fd, path = tempfile.mkstemp(suffix='.ndjson')
        os.close(fd)
        try:
            log.write_ndjson(path)
            with open(path) as f:
                lines = [ujson.loads(line) for line in f]
        finally:
            if os.path.exists(path):
                os.unlink(path)
        self.assertEqual(len(lines), len(log.records))
        self.assertEqual(sorted(lines[0]), ['actor', 'digest', 'kind', 'seq', 'time'])

class DeterminismTest(VdpTestCase):
    def test_same_seed_same_run(self):
        # type: () -> None
        config = parse_sim_config(sim_config(equal_validators(3), duration=300))
        first, _ = run_sim(config)
        second, _ = run_sim(config)
        self.assertEqual(first.to_dict(), second.to_dict())
        other, _ = run_sim(config._replace(rng_seed=8))
        self.assertNotEqual(first.trajectory, other.trajectory)

    def test_disabled_log_keeps_publications(self):
        # type: () -> None
        config = parse_sim_config(sim_config(duration=300))
        sim = Simulation(config)
        report = sim.run()
        self.assertFalse(sim.log.enabled)
        self.assertEqual(list(sim.log.counts()), [BLOCK_PUBLISHED] if report.final_height else [])
        self.assertEqual(replay_event_log(sim.log, sim.store).tip, sim.tree.tip)

    def test_latency_orphans_blocks(self):
        # type: () -> None
        config = parse_sim_config(sim_config(equal_validators(4), duration=600, round_delta=5))
        report, _ = run_sim(config)
        self.assertEqual(report.conservation_checks, sum(report.published_counts) + 1)
        self.assertEqual(report.final_height + report.orphaned_blocks,
                         sum(report.published_counts))
        self.assertGreater(report.orphaned_blocks, 0)

    @slow(5.0, 'squares real puzzles and signs with real keys')
    def test_real_mode(self):
        # type: () -> None
        config = parse_sim_config(sim_config(mode='real', gamma='1/2', duration=20,
                                             quality_window=1))
        report, _ = run_sim(config)
        self.assertGreater(report.final_height, 0)
        self.assertEqual(report.conservation_checks, sum(report.published_counts) + 1)
        self.assertEqual(report.honest_height_collisions, 0)

class BlockShareTest(VdpTestCase):
    def shares(self, speeds, blocks, seed):
        # type: (List[float], int, int) -> Tuple[List[float], int]
        stake = '1/%d' % (len(speeds),)
        rate = sum(speeds) / 8192.0
        config = parse_sim_config(sim_config(
            [(stake, q, True) for q in speeds], gamma='1/8192', duration=blocks / rate,
            round_delta=0, rng_seed=seed, sample_points=5, quality_window=100))
        report, _ = run_sim(config)
        return report.shares, report.final_height

    def assert_share(self, observed, p, n, k=3):
        # type: (float, float, int, int) -> None
        self.assert_within_sigma(observed, p, math.sqrt(p * (1 - p) / n), k=k)

    @slow(15.0, 'ten thousand blocks')
    def test_equal_speeds_split_evenly(self):
        # type: () -> None
        shares, n = self.shares([1000.0, 1000.0], 10000, 31)
        self.assertGreater(n, 9000)
        self.assert_share(shares[0], 0.5, n)

    @slow(15.0, 'ten thousand blocks')
    def test_double_speed_doubles_share(self):
        # type: () -> None
        shares, n = self.shares([1000.0, 2000.0], 10000, 32)
        self.assert_share(shares[0], 1 / 3, n)
        self.assert_share(shares[1], 2 / 3, n)

    @slow(90.0, 'a hundred thousand blocks')
    def test_shares_proportional_to_speed(self):
        # type: () -> None
        speeds = [1000.0 * i for i in range(1, 11)]
        shares, n = self.shares(speeds, 100000, 33)
        self.assertGreater(n, 95000)
        expected = np.asarray(speeds) / sum(speeds)
        for observed, p in zip(shares, expected):
            self.assert_share(observed, float(p), n, k=4)
        counts = np.rint(np.asarray(shares) * n)
        self.assertGreater(scipy.stats.chisquare(counts, expected * counts.sum()).pvalue, 0.01)

class ExperimentTest(VdpTestCase):
    def test_trials(self):
        # type: () -> None
        config = parse_sim_config(sim_config(duration=200, trials=3))
        reports, summary = run_trials(config)
        self.assertEqual(len(reports), 3)
        self.assertEqual(summary['trials'], 3)
        self.assertEqual(summary['final_D_h'], [r.trajectory[-1][1] for r in reports])
        self.assertEqual(summary['success_rate'], 0.0)

    @slow(120.0, 'a thousand honest runs of three hundred blocks')
    def test_honest_growth_frequency(self):
        # type: () -> None
        config = parse_sim_config(sim_config(
            [('1', 20.0, True)], gamma='1/20', duration=300, round_delta=0, trials=1000,
            rng_seed=41, sample_points=2, quality_window=1))
        self.assertAlmostEqual(run_sim(config)[0].lambda_h_expected, 1.0)
        _, summary = run_trials(config, jobs=4)
        heights = np.asarray(summary['final_D_h'])
        self.assertEqual(len(heights), 1000)
        self.assert_within_sigma(float(heights.mean()), 300.0, math.sqrt(300.0 / 1000), k=4)
        p = float(np.mean(heights < 0.8 * 300))
        sigma = math.sqrt(p * (1 - p) / len(heights))
        self.assertLessEqual(p, 2 * math.exp(-300 * 0.04 / 3) + 3 * sigma)

    def test_backbone(self):
        # type: () -> None
        result = run_experiment(sim_config(duration=100))
        self.assertEqual(result['experiment'], 'backbone')
        self.assertIn('report', result)
        self.assertIn('log', result)
        result = run_experiment(sim_config(duration=100, trials=2))
        self.assertEqual(len(result['reports']), 2)
        self.assertEqual(result['summary']['trials'], 2)

    def test_standalone_experiments(self):
        # type: () -> None
        result = run_experiment(self.fixture_data('sim_bfs_tail.json'))
        self.assertEqual(result['experiment'], 'bfs_tail')
        self.assertEqual(len(result['depths']), 20)
        result = run_experiment(self.fixture_data('sim_long_range.json'))
        self.assertEqual(len(result['outcomes']), 20)
        result = run_experiment(self.fixture_data('sim_multi_fork.json'))
        self.assertEqual(result['trials'], 40)
        self.assertIn('single(1)', result['strategies'])

    def test_experiment_errors(self):
        # type: () -> None
        with self.assertRaises(ConfigError):
            run_experiment({'experiment': 'mining'})
        with self.assertRaises(ConfigError):
            run_experiment({'experiment': 'bfs_tail', 'duration': 10})
        with self.assertRaises(ConfigError):
            run_experiment({'experiment': 'multi_fork_economics'})

    def test_parallel_trials_match_serial(self):
        # type: () -> None
        raw = self.fixture_data('sim_bfs_tail.json')
        serial = run_experiment(raw, jobs=1)
        parallel = run_experiment(raw, jobs=2)
        self.assertEqual(parallel['depths'], serial['depths'])
        self.assertEqual(parallel['mean_depth'], serial['mean_depth'])
        self.assertEqual(parallel['trials'], 20)

        raw = self.fixture_data('sim_long_range.json')
        self.assertEqual(run_experiment(raw, jobs=3)['outcomes'],
                         run_experiment(raw, jobs=1)['outcomes'])

        config = parse_sim_config(sim_config(duration=150, trials=3))
        serial_reports, _ = run_trials(config, jobs=1)
        parallel_reports, _ = run_trials(config, jobs=2)
        self.assertEqual([r.to_dict() for r in parallel_reports],
                         [r.to_dict() for r in serial_reports])
