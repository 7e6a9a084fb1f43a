"""
Expected rewards of forking strategies under multi-fork slashing.

A validator facing k forks has already published x_i blocks on fork i
and could add y_i more.  Exactly one fork wins, fork i with probability
p_i.  Blocks on the winning fork earn R each; blocks on every other fork
are slashed (1+eps)*R each.  When the validator reports its own
equivocations it recovers eps*R per block, so each losing block costs
exactly R.

All arithmetic is exact (`Fraction`); probabilities given as floats are
read through their shortest repr.
"""
from __future__ import absolute_import

from collections import namedtuple
from fractions import Fraction
from typing import Any, Dict, List, Sequence, Union

from vdpchain.exceptions import ConfigError, EconError
from vdpchain.lib.config import format_fraction, get_setting, parse_fraction
from vdpchain.lib.validator import check_dict, check_fraction, check_int, check_list, check_range

PROBABILITY_TOLERANCE = Fraction(1, 10 ** 12)

ALL_FORKS = 'all_forks'
SINGLE = 'single'

ForkOption = namedtuple('ForkOption', ['win_prob', 'published', 'prospective'])
Strategy = namedtuple('Strategy', ['kind', 'index', 'value'])
Outcome = namedtuple('Outcome', ['winner', 'probability', 'gains', 'losses', 'rebate', 'reward'])

check_fork = check_dict([('win_prob', check_fraction),
                         ('published', check_range(check_int, 0, None)),
                         ('prospective', check_range(check_int, 0, None))])
check_scenario = check_dict([('forks', check_list(check_fork))],
                            [('block_reward', check_fraction),
                             ('epsilon', check_fraction)])

def _exact(value, name):
    # type: (Any, str) -> Fraction
    if isinstance(value, Fraction):
        return value
    try:
        return parse_fraction(value, name)
    except ConfigError:
        raise EconError('%s is not a number: %r' % (name, value))

class ForkScenario(namedtuple('ForkScenario', ['forks', 'block_reward', 'epsilon'])):
    __slots__ = ()

    @staticmethod
    def make(forks, block_reward=None, epsilon=None):
        # type: (Sequence[Any], Any, Any) -> ForkScenario
        if block_reward is None:
            block_reward = get_setting('CHAIN_BLOCK_REWARD')
        if epsilon is None:
            epsilon = get_setting('CHAIN_EPSILON')
        options = tuple(ForkOption(_exact(f[0], 'win_prob'), int(f[1]), int(f[2])) for f in forks)
        return ForkScenario(options, _exact(block_reward, 'block_reward'),
                            _exact(epsilon, 'epsilon')).validate()

    def validate(self):
        # type: () -> ForkScenario
        if not self.forks:
            raise EconError('a scenario needs at least one fork')
        for f in self.forks:
            if f.win_prob < 0 or f.win_prob > 1:
                raise EconError('win probabilities must lie in [0, 1]')
            if f.published < 0 or f.prospective < 0:
                raise EconError('block counts must be non-negative')
        if abs(sum(f.win_prob for f in self.forks) - 1) > PROBABILITY_TOLERANCE:
            raise EconError('win probabilities sum to %s, not 1'
                            % (float(sum(f.win_prob for f in self.forks)),))
        if not (0 <= self.epsilon < 1):
            raise EconError('epsilon must lie in [0, 1)')
        return self

    @property
    def total_published(self):
        # type: () -> int
        return sum(f.published for f in self.forks)

    @property
    def total_prospective(self):
        # type: () -> int
        return sum(f.prospective for f in self.forks)

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'forks': [{'win_prob': float(f.win_prob), 'published': f.published,
                           'prospective': f.prospective} for f in self.forks],
                'block_reward': format_fraction(self.block_reward),
                'epsilon': format_fraction(self.epsilon)}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> ForkScenario
        error = check_scenario('scenario', d)
        if error:
            raise EconError(error)
        return ForkScenario.make([(f['win_prob'], f['published'], f['prospective'])
                                  for f in d['forks']],
                                 d.get('block_reward'), d.get('epsilon'))

def _check_index(s, i):
    # type: (ForkScenario, int) -> None
    if not isinstance(i, int) or not (1 <= i <= len(s.forks)):
        raise EconError('fork index %r out of range 1..%d' % (i, len(s.forks)))

def reward_all_forks(s, self_submit=True):
    # type: (ForkScenario, bool) -> Fraction
    """E_0 = (2 sum p_i (x_i + y_i) - (X + Y)) * R when self-submitting."""
    s.validate()
    if not self_submit:
        return expected_reward(s, ALL_FORKS, self_submit=False)
    weighted = sum(f.win_prob * (f.published + f.prospective) for f in s.forks)
    return (2 * weighted - (s.total_published + s.total_prospective)) * s.block_reward

def reward_single_fork(s, i, self_submit=True):
    # type: (ForkScenario, int, bool) -> Fraction
    """E_i for mining only on fork i (1-based)."""
    s.validate()
    _check_index(s, i)
    if not self_submit:
        return expected_reward(s, i, self_submit=False)
    weighted = sum(f.win_prob * (f.published + f.prospective) for f in s.forks)
    others = sum(f.win_prob * f.prospective for j, f in enumerate(s.forks, 1) if j != i)
    y_i = s.forks[i - 1].prospective
    return (2 * weighted - (s.total_published + 2 * others + y_i)) * s.block_reward

def enumerate_outcomes(s, strategy, self_submit=True):
    # type: (ForkScenario, Union[str, int], bool) -> List[Outcome]
    """One row per possible winning fork, computed by counting blocks
    rather than from the closed forms."""
    s.validate()
    if strategy != ALL_FORKS:
        _check_index(s, strategy)
    rows = []  # type: List[Outcome]
    for w, winner in enumerate(s.forks, 1):
        held = []
        for j, f in enumerate(s.forks, 1):
            mined = f.prospective if (strategy == ALL_FORKS or strategy == j) else 0
            held.append(f.published + mined)
        gains = held[w - 1]
        losses = sum(held) - gains
        rebate = s.epsilon * losses if self_submit else Fraction(0)
        reward = (gains - (1 + s.epsilon) * losses + rebate) * s.block_reward
        rows.append(Outcome(w, winner.win_prob, gains, losses, rebate * s.block_reward, reward))
    return rows

def expected_reward(s, strategy, self_submit=True):
    # type: (ForkScenario, Union[str, int], bool) -> Fraction
    return sum((o.probability * o.reward for o in enumerate_outcomes(s, strategy, self_submit)),
               Fraction(0))

def best_strategy(s, self_submit=True):
    # type: (ForkScenario, bool) -> Strategy
    """Ties go to the single fork with the smallest index; mining on all
    forks wins only when strictly better."""
    best = None  # type: Any
    for i in range(1, len(s.forks) + 1):
        value = reward_single_fork(s, i, self_submit)
        if best is None or value > best.value:
            best = Strategy(SINGLE, i, value)
    all_forks = reward_all_forks(s, self_submit)
    if all_forks > best.value:
        best = Strategy(ALL_FORKS, None, all_forks)
    return best

def strategy_table(s):
    # type: (ForkScenario) -> List[Dict[str, Any]]
    best = best_strategy(s)
    rows = []
    for strategy in [ALL_FORKS] + list(range(1, len(s.forks) + 1)):
        if strategy == ALL_FORKS:
            value = reward_all_forks(s)
            is_best = best.kind == ALL_FORKS
            name = ALL_FORKS
        else:
            value = reward_single_fork(s, strategy)
            is_best = best.kind == SINGLE and best.index == strategy
            name = 'single(%d)' % (strategy,)
        raw = expected_reward(s, strategy, self_submit=False)
        rows.append({'strategy': name,
                     'value': float(value),
                     'value_over_R': float(value / s.block_reward) if s.block_reward else 0.0,
                     'raw_value': float(raw),
                     'best': is_best})
    return rows
