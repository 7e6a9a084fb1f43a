"""
Numeric evaluators for the security bounds of the protocol: block-rate
tails, the honest/adversary gap, the attacker's reward bound and the
long-range attack thresholds.

Everything is plain double precision.  A bound that is meaningless for
the given parameters comes back as a `Vacuous` marker carrying the
reason, never as a number.
"""
from __future__ import absolute_import
from __future__ import division

from collections import namedtuple
from typing import Any, Dict, List, Sequence, Union

import logging
import math

from scipy import optimize

from vdpchain.exceptions import BoundsError
from vdpchain.lib.validator import (
    check_dict, check_float, check_list, check_range, check_string, check_variable_type,
    equals,
)

logger = logging.getLogger('vdpchain')

E = math.e

class Vacuous(namedtuple('Vacuous', ['reason'])):
    __slots__ = ()

    def __bool__(self):
        # type: () -> bool
        return False

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'vacuous': True, 'reason': self.reason}

GAP_NOT_POSITIVE = 'honest_rate_not_above_e_times_adversary'
ATTACK_ALWAYS_VIABLE = 'attack_always_viable'
ATTACK_INFEASIBLE = 'attack_infeasible'

class BackboneParams(namedtuple('BackboneParams', ['lambda_h', 'lambda_a', 'T', 'delta', 'x',
                                                   'round_delta'])):
    __slots__ = ()

    def validate(self):
        # type: () -> BackboneParams
        if self.lambda_h < 0 or self.lambda_a < 0:
            raise BoundsError('block rates must be non-negative')
        if not (0 < self.delta < 1):
            raise BoundsError('delta must lie in (0, 1)')
        if self.T < 0:
            raise BoundsError('T must be non-negative')
        if self.x < 0:
            raise BoundsError('x must be non-negative')
        return self

GapBound = namedtuple('GapBound', ['nu', 'zeta', 'prob_lower_bound'])

class LongRangeParams(namedtuple('LongRangeParams', ['alpha_h', 'p_s', 'l_c', 'l_a',
                                                     'lambda_h'])):
    __slots__ = ()

    @property
    def depth(self):
        # type: () -> float
        return self.l_c - self.l_a

    def validate(self):
        # type: () -> LongRangeParams
        if not (0 < self.alpha_h <= 1):
            raise BoundsError('alpha_h must lie in (0, 1]')
        if not (0 <= self.p_s <= 1):
            raise BoundsError('p_s must lie in [0, 1]')
        if self.l_a > self.l_c:
            raise BoundsError('the attack must fork below the current height')
        return self

def _clamp(p):
    # type: (float) -> float
    return min(1.0, max(0.0, p))

def speed_weighted_stakes(stakes, speeds):
    # type: (Sequence[float], Sequence[float]) -> List[float]
    if len(stakes) != len(speeds):
        raise BoundsError('stakes and speeds differ in length')
    if any(s < 0 for s in stakes) or any(q < 0 for q in speeds):
        raise BoundsError('stakes and speeds must be non-negative')
    products = [s * q for s, q in zip(stakes, speeds)]
    total = sum(products)
    if total <= 0:
        raise BoundsError('no validator has both stake and speed')
    return [p / total for p in products]

def honest_sws_threshold():
    # type: () -> float
    """Honest speed-weighted stake must exceed this, about 73.1%."""
    return 1 - 1 / (1 + E)

def adversary_sws_threshold():
    # type: () -> float
    return 1 / (1 + E)

def bfs_tail_bound(params):
    # type: (BackboneParams) -> float
    """Pr(D_a(T) > e*lambda_a*T + x) <= e^-x."""
    return math.exp(-params.validate().x)

def chernoff_growth_bound(params):
    # type: (BackboneParams) -> float
    """Pr(D_h(T) < (1-delta)*lambda_h*T) <= 2 e^(-lambda_h T delta^2 / 3)."""
    p = params.validate()
    return min(1.0, 2 * math.exp(-p.lambda_h * p.T * p.delta ** 2 / 3))

def gap_bound(params):
    # type: (BackboneParams) -> Union[GapBound, Vacuous]
    """
    Lower bound on Pr(D_h(T) - D_a(T) > nu*T) with nu = (lambda_h -
    e*lambda_a)/3.  The exponent is zeta = min(nu^2/(3 lambda_h), nu):
    the product of the two tail bounds is only dominated by the smaller
    one.
    """
    p = params.validate()
    nu = (p.lambda_h - E * p.lambda_a) / 3
    if nu <= 0:
        logger.warning('gap bound requested with lambda_h <= e * lambda_a')
        return Vacuous(GAP_NOT_POSITIVE)
    zeta = min(nu ** 2 / (3 * p.lambda_h), nu)
    prob = _clamp(1 - 2 * math.exp(-zeta * p.T)) ** 2
    return GapBound(nu, zeta, prob)

def attacker_win_probability(params):
    # type: (BackboneParams) -> Union[float, Vacuous]
    """Lower bound on Pr(D_h(T) > D_a(T))."""
    bound = gap_bound(params)
    if isinstance(bound, Vacuous):
        return bound
    return bound.prob_lower_bound

def long_range_success_bound(params):
    # type: (BackboneParams) -> Union[float, Vacuous]
    """Upper bound on a plain long-range fork overtaking the public chain."""
    bound = gap_bound(params)
    if isinstance(bound, Vacuous):
        return bound
    return 1 - bound.prob_lower_bound

def attacker_reward_bound(params, block_reward):
    # type: (BackboneParams, float) -> Union[float, Vacuous]
    """
    Upper bound on the expected reward of an attacker mining privately for
    T: the chance the gap bound fails times the most it could earn, plus
    the tail of a longer private chain weighted by its length.
    """
    p = params.validate()
    bound = gap_bound(p)
    if isinstance(bound, Vacuous):
        return bound
    zeta = bound.zeta
    n = math.floor(p.lambda_h * p.T)
    failure = 2 * (math.exp(-zeta * p.T) - math.exp(-2 * zeta * p.T))
    head = failure * (1 + n) * n * block_reward
    inv_e = math.exp(-1)
    series = (p.lambda_h * p.T + 1) / (1 - inv_e) + inv_e / (1 - inv_e) ** 2
    tail = math.exp(-(p.lambda_h - E * p.lambda_a) * p.T + 1) * series * block_reward
    return max(0.0, head + tail)

def adversary_stake_bound(p):
    # type: (LongRangeParams) -> float
    """Expected stake an attacker holds at l_a after buying the old keys
    of everyone who staked in the window (l_a, l_c]."""
    p = p.validate()
    return _clamp(p.p_s * p.depth * p.alpha_h + (1 - p.alpha_h))

def long_range_alpha_threshold(p_s, depth):
    # type: (float, float) -> Union[float, Vacuous]
    """Honest stake above this leaves a long-range fork of the given
    depth negligible odds."""
    denominator = 1 + 1 / E - p_s * depth
    if denominator <= 0:
        return Vacuous(ATTACK_ALWAYS_VIABLE)
    return 1 / denominator

def viability_depth(p_s, alpha_h):
    # type: (float, float) -> float
    """The depth at which the threshold reaches alpha_h."""
    if p_s <= 0:
        return math.inf
    return (1 + 1 / E - 1 / alpha_h) / p_s

def long_range_min_time(p):
    # type: (LongRangeParams) -> Union[float, Vacuous]
    """Least time a viable long-range attack needs, in the time unit of
    lambda_h.  An infinite depth gives the limit 1/(lambda_h e p_s)."""
    p = p.validate()
    depth = p.depth
    if math.isinf(depth):
        if p.p_s <= 0:
            return Vacuous(ATTACK_INFEASIBLE)
        return 1 / (p.lambda_h * E * p.p_s)
    denominator = p.lambda_h * (E * p.p_s * depth + E / p.alpha_h - E - 1)
    if denominator <= 0:
        return Vacuous(ATTACK_INFEASIBLE)
    return depth / denominator

def chain_growth_tau(lambda_h, round_delta, delta):
    # type: (float, float, float) -> float
    return lambda_h * round_delta * (1 - delta)

def chain_growth_probability(lambda_h, round_delta, delta, s):
    # type: (float, float, float, float) -> float
    """Lower bound on the chain growing by tau*s blocks over s rounds."""
    return max(0.0, 1 - 2 * math.exp(-lambda_h * s * round_delta * delta ** 2 / 3))

def bfs_growth_speed(lambda_a, b):
    # type: (float, int) -> float
    """
    Depth per unit time of a private tree in which every block gets b
    children, each after an exponential time of rate lambda_a/b.  With
    z in (0, 1] the root of log(b) + log(z) = z - 1, the speed is
    lambda_a / (b z): lambda_a at b = 1 and approaching e*lambda_a.
    """
    if b < 1:
        raise BoundsError('branching factor must be at least 1')
    if b == 1:
        return float(lambda_a)
    log_b = math.log(b)
    f = lambda z: log_b + math.log(z) - z + 1
    z = optimize.brentq(f, 1e-300, 1.0 - 1e-15)
    return lambda_a / (b * z)

check_backbone = check_dict([('lambda_h', check_range(check_float, 0)),
                             ('lambda_a', check_range(check_float, 0)),
                             ('T', check_range(check_float, 0)),
                             ('delta', check_range(check_float, 0, 1, False, False))],
                            [('x', check_range(check_float, 0)),
                             ('round_delta', check_range(check_float, 0)),
                             ('block_reward', check_float),
                             ('rounds', check_range(check_float, 0))])
check_depth = check_variable_type([check_range(check_float, 0), equals('inf')])
check_long_range = check_dict([('alpha_h', check_range(check_float, 0, 1, False)),
                               ('p_s', check_range(check_float, 0, 1)),
                               ('lambda_h', check_range(check_float, 0, None, False))],
                              [('depths', check_list(check_depth)),
                               ('stakes', check_list(check_float)),
                               ('speeds', check_list(check_float)),
                               ('branching', check_list(check_range(check_float, 1)))])
check_bounds_config = check_dict([], [('backbone', check_backbone),
                                      ('long_range', check_long_range),
                                      ('label', check_string)])

def parse_depth(value):
    # type: (Any) -> float
    return math.inf if value == 'inf' else float(value)

def format_value(value):
    # type: (Any) -> Any
    """JSON-safe rendering: vacuous markers by reason, infinities as "inf"."""
    if isinstance(value, Vacuous):
        return value.to_dict()
    if isinstance(value, float) and math.isinf(value):
        return 'inf'
    return value

def bound_table(config):
    # type: (Dict[str, Any]) -> List[Dict[str, Any]]
    """Every bound the config has parameters for, one row each."""
    error = check_bounds_config('bounds', config)
    if error:
        raise BoundsError(error)
    rows = []  # type: List[Dict[str, Any]]

    def add(name, value, **params):
        # type: (str, Any, **Any) -> None
        rows.append({'bound': name, 'value': format_value(value),
                     'params': dict((k, format_value(v)) for k, v in params.items())})

    add('honest_sws_threshold', honest_sws_threshold())
    add('adversary_sws_threshold', adversary_sws_threshold())

    if 'backbone' in config:
        b = config['backbone']
        bp = BackboneParams(float(b['lambda_h']), float(b['lambda_a']), float(b['T']),
                            float(b['delta']), float(b.get('x', 0)),
                            float(b.get('round_delta', 1))).validate()
        add('bfs_tail', bfs_tail_bound(bp), x=bp.x)
        add('chernoff_growth', chernoff_growth_bound(bp), T=bp.T, delta=bp.delta)
        gap = gap_bound(bp)
        if isinstance(gap, Vacuous):
            add('gap', gap)
        else:
            add('gap_nu', gap.nu)
            add('gap_zeta', gap.zeta)
            add('gap', gap.prob_lower_bound, T=bp.T)
        add('honest_lead_probability', attacker_win_probability(bp), T=bp.T)
        add('long_range_success', long_range_success_bound(bp), T=bp.T)
        add('attacker_reward', attacker_reward_bound(bp, float(b.get('block_reward', 1))),
            T=bp.T)
        add('chain_growth_tau', chain_growth_tau(bp.lambda_h, bp.round_delta, bp.delta))
        add('chain_growth_probability',
            chain_growth_probability(bp.lambda_h, bp.round_delta, bp.delta,
                                     float(b.get('rounds', bp.T))),
            rounds=float(b.get('rounds', bp.T)))

    if 'long_range' in config:
        lr = config['long_range']
        alpha_h, p_s, lambda_h = float(lr['alpha_h']), float(lr['p_s']), float(lr['lambda_h'])
        add('viability_depth', viability_depth(p_s, alpha_h), alpha_h=alpha_h, p_s=p_s)
        add('viability_window', viability_depth(p_s, alpha_h) / lambda_h, lambda_h=lambda_h)
        add('long_range_alpha_threshold', long_range_alpha_threshold(p_s, 0), depth=0)
        for raw in lr.get('depths', []):
            depth = parse_depth(raw)
            params = LongRangeParams(alpha_h, p_s, depth, 0.0, lambda_h).validate()
            if not math.isinf(depth):
                add('long_range_alpha_threshold', long_range_alpha_threshold(p_s, depth),
                    depth=depth)
                add('adversary_stake', adversary_stake_bound(params), depth=depth)
            add('long_range_min_time', long_range_min_time(params), depth=depth)
        if 'stakes' in lr or 'speeds' in lr:
            stakes = lr.get('stakes', [])
            speeds = lr.get('speeds', [1.0] * len(stakes))
            for i, value in enumerate(speed_weighted_stakes(stakes, speeds)):
                add('speed_weighted_stake', value, index=i)
        for b in lr.get('branching', []):
            add('bfs_growth_speed', bfs_growth_speed(lambda_h, int(b)), branching=int(b))
    return rows
