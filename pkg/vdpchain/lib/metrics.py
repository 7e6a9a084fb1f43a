"""
Backbone measurements over simulation output, and the report writers.
"""
from __future__ import absolute_import
from __future__ import division

from collections import namedtuple
from typing import Any, Dict, List, Sequence, Tuple

import itertools
import logging

import numpy as np
import pandas as pd

from vdpchain.exceptions import SimError
from vdpchain.lib.config import dump_json

logger = logging.getLogger('vdpchain.sim')

TIMESERIES_COLUMNS = ['time', 'D_h', 'D_a', 'N_h', 'gap']

def measure_chain_quality(honest_flags, window):
    # type: (Sequence[bool], int) -> float
    """The smallest share of honest blocks in any `window` consecutive
    blocks."""
    flags = np.asarray(honest_flags, dtype=np.int64)
    if window < 1 or window > len(flags):
        raise SimError('quality window %d does not fit a chain of %d blocks'
                       % (window, len(flags)))
    sums = np.lib.stride_tricks.sliding_window_view(flags, window).sum(axis=1)
    return float(sums.min()) / window

def prefix_depth(tree, a, b):
    # type: (Any, bytes, bytes) -> int
    """The least k such that each chain, cut k blocks short, is a prefix
    of the other."""
    lca = tree.blocks[tree.common_ancestor(a, b)].height
    return max(tree.blocks[a].height, tree.blocks[b].height) - lca

def rollback_depth(tree, earlier, later):
    # type: (Any, bytes, bytes) -> int
    """Blocks of an earlier view's chain that a later view has dropped."""
    lca = tree.blocks[tree.common_ancestor(earlier, later)].height
    return tree.blocks[earlier].height - lca

def measure_common_prefix(tree, tips, k):
    # type: (Any, Sequence[bytes], int) -> int
    """Pairs of views whose chains disagree deeper than k blocks."""
    return sum(1 for a, b in itertools.combinations(tips, 2) if prefix_depth(tree, a, b) > k)

def measure_growth(heights, rounds):
    # type: (Sequence[int], int) -> float
    """Least height gained per round over any span of `rounds` rounds;
    `heights` holds the chain height at consecutive round boundaries."""
    h = np.asarray(heights, dtype=np.int64)
    if rounds < 1 or rounds >= len(h):
        raise SimError('growth span of %d rounds needs more than %d samples'
                       % (rounds, len(h)))
    return float((h[rounds:] - h[:-rounds]).min()) / rounds

def heights_at(times, change_times, change_heights):
    # type: (Sequence[float], Sequence[float], Sequence[int]) -> np.ndarray
    """Step function lookup: the height in force at each of `times`."""
    idx = np.searchsorted(np.asarray(change_times), np.asarray(times), side='right') - 1
    values = np.asarray(change_heights, dtype=np.int64)
    return np.where(idx >= 0, values[np.maximum(idx, 0)], 0)

REPORT_FIELDS = [
    'config', 'duration', 'validators', 'block_counts', 'published_counts', 'block_rates',
    'shares', 'lambda_h', 'lambda_a', 'lambda_h_expected', 'lambda_a_expected',
    'final_height', 'orphaned_blocks', 'trajectory', 'gap_samples', 'chain_quality',
    'common_prefix_k', 'common_prefix_violations', 'confirmed_reversions', 'growth_tau',
    'honest_height_collisions', 'adversary_net_reward', 'slashing_events', 'slashed_total',
    'submitter_rewards', 'equivocations_injected', 'equivocations_detected',
    'conservation_checks', 'solver_bound_hit', 'success', 'cancelled_solves',
]

class MetricsReport(namedtuple('MetricsReport', REPORT_FIELDS)):
    __slots__ = ()

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return dict(zip(self._fields, self))

    def timeseries(self):
        # type: () -> pd.DataFrame
        return pd.DataFrame(self.trajectory, columns=TIMESERIES_COLUMNS)

def write_metrics(report, path):
    # type: (Any, str) -> None
    data = report.to_dict() if hasattr(report, 'to_dict') else report
    with open(path, 'w') as f:
        f.write(dump_json(data))
        f.write('\n')

def write_timeseries(report, path):
    # type: (MetricsReport, str) -> None
    report.timeseries().to_csv(path, index=False, float_format='%.6f')

def summarize_trials(reports):
    # type: (Sequence[MetricsReport]) -> Dict[str, Any]
    """Per-field mean and spread of the numeric metrics over trials."""
    summary = {'trials': len(reports)}  # type: Dict[str, Any]
    for name in ('final_height', 'lambda_h', 'chain_quality', 'common_prefix_k',
                 'growth_tau', 'adversary_net_reward', 'confirmed_reversions',
                 'slashing_events'):
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if not values:
            continue
        arr = np.asarray(values, dtype=float)
        summary[name] = {'mean': float(arr.mean()), 'std': float(arr.std()),
                         'min': float(arr.min()), 'max': float(arr.max())}
    summary['success_rate'] = (sum(1 for r in reports if r.success) / len(reports)
                               if reports else 0.0)
    summary['final_D_h'] = [r.trajectory[-1][1] if r.trajectory else 0 for r in reports]
    return summary
