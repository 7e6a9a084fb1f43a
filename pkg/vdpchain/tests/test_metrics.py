from __future__ import absolute_import

import os
import tempfile

import pandas as pd
import ujson

from vdpchain.exceptions import SimError
from vdpchain.lib.metrics import (
    REPORT_FIELDS, TIMESERIES_COLUMNS, MetricsReport, heights_at, measure_chain_quality,
    measure_common_prefix, measure_growth, prefix_depth, rollback_depth, summarize_trials,
    write_metrics, write_timeseries,
)
from vdpchain.lib.test_helpers import ChainFixture, VdpTestCase

def blank_report(**fields):
    # type: (**object) -> MetricsReport
    return MetricsReport(**dict.fromkeys(REPORT_FIELDS))._replace(**fields)

class MeasureTest(VdpTestCase):
    def test_chain_quality(self):
        # type: () -> None
        flags = [True, True, False, True, False, False, True, True]
        self.assertAlmostEqual(measure_chain_quality(flags, 3), 1 / 3.0)
        self.assertEqual(measure_chain_quality(flags, 1), 0.0)
        self.assertEqual(measure_chain_quality(flags, 8), 5 / 8.0)
        self.assertEqual(measure_chain_quality([True] * 4, 2), 1.0)
        with self.assertRaises(SimError):
            measure_chain_quality(flags, 9)
        with self.assertRaises(SimError):
            measure_chain_quality(flags, 0)

    def test_growth(self):
        # type: () -> None
        heights = [0, 1, 1, 3, 4, 4, 6]
        self.assertEqual(measure_growth(heights, 2), 0.5)
        self.assertEqual(measure_growth(heights, 1), 0.0)
        self.assertEqual(measure_growth(heights, 6), 1.0)
        with self.assertRaises(SimError):
            measure_growth(heights, 7)

    def test_heights_at(self):
        # type: () -> None
        heights = heights_at([-1, 0, 0.5, 2, 10], [0, 1, 3], [0, 1, 2])
        self.assertEqual(list(heights), [0, 0, 0, 1, 2])

    def test_common_prefix(self):
        # type: () -> None
        fx = ChainFixture(validators=2)
        k0, k1 = fx.keys
        trunk = fx.extend(fx.genesis, k0, 4)
        branch = fx.extend(trunk[1], k1, 3)
        a, b = trunk[-1].digest, branch[-1].digest
        self.assertEqual(prefix_depth(fx.tree, a, b), 3)
        self.assertEqual(prefix_depth(fx.tree, a, trunk[1].digest), 2)
        self.assertEqual(prefix_depth(fx.tree, a, a), 0)
        self.assertEqual(measure_common_prefix(fx.tree, [a, b, a], 2), 2)
        self.assertEqual(measure_common_prefix(fx.tree, [a, b, a], 3), 0)
        self.assertEqual(measure_common_prefix(fx.tree, [a], 0), 0)

        # A view extended since it was sampled has lost nothing.
        self.assertEqual(rollback_depth(fx.tree, trunk[1].digest, a), 0)
        self.assertEqual(rollback_depth(fx.tree, a, b), 2)
        self.assertEqual(rollback_depth(fx.tree, b, a), 3)

class ReportTest(VdpTestCase):
    def setUp(self):
        # type: () -> None
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        # type: () -> None
        for name in os.listdir(self.tmpdir):
            os.unlink(os.path.join(self.tmpdir, name))
        os.rmdir(self.tmpdir)

    def test_timeseries_csv(self):
        # type: () -> None
        report = blank_report(trajectory=[[0.0, 0, 0, 0, 0], [5.0, 3, 1, 4, 2]])
        path = os.path.join(self.tmpdir, 'run.csv')
        write_timeseries(report, path)
        frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), TIMESERIES_COLUMNS)
        self.assertEqual(list(frame['D_h']), [0, 3])
        self.assertEqual(list(frame['gap']), [0, 2])

    def test_metrics_json(self):
        # type: () -> None
        report = blank_report(duration=10.0, block_counts=[3, 4], success=False)
        path = os.path.join(self.tmpdir, 'run.json')
        write_metrics(report, path)
        with open(path) as f:
            data = ujson.load(f)
        self.assertEqual(sorted(data), sorted(REPORT_FIELDS))
        self.assertEqual(data['block_counts'], [3, 4])
        self.assertIsNone(data['chain_quality'])

    def test_summarize(self):
        # type: () -> None
        reports = [
            blank_report(final_height=10, lambda_h=1.0, chain_quality=0.5, success=True,
                         trajectory=[[0.0, 0, 0, 0, 0], [1.0, 10, 0, 10, 10]]),
            blank_report(final_height=20, lambda_h=2.0, chain_quality=None, success=False,
                         trajectory=[]),
        ]
        summary = summarize_trials(reports)
        self.assertEqual(summary['trials'], 2)
        self.assertEqual(summary['final_height'],
                         {'mean': 15.0, 'std': 5.0, 'min': 10.0, 'max': 20.0})
        self.assertEqual(summary['chain_quality']['mean'], 0.5)
        self.assertNotIn('growth_tau', summary)
        self.assertEqual(summary['success_rate'], 0.5)
        self.assertEqual(summary['final_D_h'], [10, 0])
        self.assertEqual(summarize_trials([])['success_rate'], 0.0)
