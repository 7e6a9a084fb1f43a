from __future__ import absolute_import
from __future__ import division

from typing import Any, Dict, List

import math

import pandas as pd

from vdpchain.exceptions import CheckFailed, ConfigError
from vdpchain.lib import bounds
from vdpchain.lib.config import parse_fraction
from vdpchain.lib.management import VdpCommand
from vdpchain.lib.metrics import REPORT_FIELDS

GROWTH_DELTA = 0.2

def speed_weighted(config):
    # type: (Dict[str, Any]) -> List[float]
    validators = config['validators']
    return bounds.speed_weighted_stakes(
        [float(parse_fraction(v['stake_fraction'])) for v in validators],
        [float(v['solver_speed']) for v in validators])

def comparison_rows(metrics):
    # type: (Dict[str, Any]) -> List[Dict[str, Any]]
    """Measured metrics against what the bounds promise for the run's
    configuration.  Each row is {check, measured, expected, pass}."""
    config = metrics['config']
    rows = []  # type: List[Dict[str, Any]]

    def add(check, measured, expected, passed):
        # type: (str, Any, Any, bool) -> None
        rows.append({'check': check, 'measured': measured, 'expected': expected,
                     'pass': bool(passed)})

    sws = speed_weighted(config)
    adversary_sws = sum(w for w, v in zip(sws, config['validators']) if not v['honest'])
    below_threshold = adversary_sws < bounds.adversary_sws_threshold()
    has_adversary = config.get('adversary') is not None
    zero_latency = not config.get('round_delta')

    trajectory = metrics['trajectory']
    d_h = [row[1] for row in trajectory]
    monotone = all(a <= b for a, b in zip(d_h, d_h[1:]))
    add('D_h non-decreasing', monotone, True, monotone)

    published = sum(metrics['published_counts'])
    add('conservation checked at every block', metrics['conservation_checks'], published + 1,
        metrics['conservation_checks'] == published + 1)

    add('equivocations detected', metrics['equivocations_detected'],
        metrics['equivocations_injected'],
        metrics['equivocations_detected'] == metrics['equivocations_injected'])

    if zero_latency and not has_adversary:
        add('honest blocks at distinct heights', metrics['honest_height_collisions'], 0,
            metrics['honest_height_collisions'] == 0)

    lambda_h = metrics['lambda_h_expected']
    lambda_a = metrics['lambda_a_expected']
    T = metrics['duration']
    growth = bounds.BackboneParams(lambda_h, lambda_a, T, GROWTH_DELTA, 0.0,
                                   float(config.get('round_delta') or 1.0))
    floor = (1 - GROWTH_DELTA) * lambda_h * T
    add('honest growth D_h(T) >= (1-delta) lambda_h T '
        '(fails with probability <= %.3g)' % (bounds.chernoff_growth_bound(growth),),
        d_h[-1] if d_h else 0, floor, (d_h[-1] if d_h else 0) >= floor)

    if below_threshold:
        quality = metrics['chain_quality']
        add('chain quality > 0', quality, '> 0', quality is not None and quality > 0)
        k = config.get('common_prefix_k')
        if k is not None:
            add('common-prefix violations at k=%d' % (k,),
                metrics['common_prefix_violations'], 0,
                metrics['common_prefix_violations'] == 0)
        add('confirmed prefix never reverted', metrics['confirmed_reversions'], 0,
            metrics['confirmed_reversions'] == 0)
        if has_adversary:
            gap = bounds.gap_bound(growth)
            add('adversary overtook', metrics['success'], False, not metrics['success'])
            if not isinstance(gap, bounds.Vacuous):
                add('honest lead probability bound', None, gap.prob_lower_bound, True)

    if not has_adversary:
        total = sum(metrics['block_counts'])
        for i, (share, expected) in enumerate(zip(metrics['shares'], sws)):
            sigma = math.sqrt(expected * (1 - expected) / total) if total else 0.0
            add('share of v%d within 3 sigma' % (i,), share, expected,
                total > 0 and abs(share - expected) <= 3 * sigma + 1e-12)
    return rows

class Command(VdpCommand):
    help = """Check a sim metrics JSON against the bounds for its own
configuration.  Prints the comparison table; exits 1 if any check fails."""

    def run(self, config, options):
        # type: (Dict[str, Any], Dict[str, Any]) -> int
        missing = [f for f in REPORT_FIELDS if f not in config]
        if missing:
            raise ConfigError('not a metrics report; missing %s' % (', '.join(missing),))
        rows = comparison_rows(config)
        frame = pd.DataFrame(rows, columns=['check', 'measured', 'expected', 'pass'])
        self.stdout.write(frame.to_string(index=False))
        if options['out'] is not None:
            self.emit(rows, options['out'])
        failed = [r['check'] for r in rows if not r['pass']]
        if failed:
            raise CheckFailed('%d checks failed: %s' % (len(failed), '; '.join(failed)))
        return 0
