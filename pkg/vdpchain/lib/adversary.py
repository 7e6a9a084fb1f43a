"""
Adversary strategies.

`bfs_depth_times` is the private block tree shared by the BFS and
long-range attacks: every node at the frontier gets `branching` children,
each after its own geometric number of squarings, and the tree keeps at
most `width` frontier nodes (the adversary's solvers).  It returns the
time the tree first reaches each depth.

The in-loop strategies plug into `vdpchain.lib.sim.Simulation` through
`register_adversary`; the standalone experiments (`run_bfs_adversary`,
`run_long_range`, `run_multi_fork_economics`) run without the event loop.
"""
from __future__ import absolute_import
from __future__ import division

from collections import namedtuple
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import logging

import numpy as np

from vdpchain.exceptions import ConfigError, LedgerError, SimError
from vdpchain.lib import econ
from vdpchain.lib.blocks import SlashTx
from vdpchain.lib.chain import (
    BlockStore, BlockTree, ChainConfig, assemble_block, make_genesis,
)
from vdpchain.lib.config import get_setting, parse_fraction
from vdpchain.lib.slashing import orphan_evidence
from vdpchain.lib.suites import SimulationSuite

logger = logging.getLogger('vdpchain.sim')

BfsRun = namedtuple('BfsRun', ['depth_times', 'generations', 'solver_bound_hit'])

def bfs_depth_times(rng, branching, gamma, speed, width, horizon, keep_paths=False):
    # type: (np.random.Generator, int, float, float, int, float, bool) -> BfsRun
    """
    `depth_times[d-1]` is when the tree first holds a block at depth d.
    With `keep_paths`, `generations[d-1]` holds (parent index, child slot,
    steps) for the kept frontier at depth d, sorted by completion time,
    so the fastest branch can be traced back.
    """
    if branching < 1 or width < 1:
        raise SimError('branching factor and solver count must be positive')
    times = np.zeros(1)
    depth_times = []  # type: List[float]
    generations = []  # type: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]
    hit = False
    while True:
        steps = rng.geometric(gamma, size=(len(times), branching))
        child = (times[:, None] + steps / speed).ravel()
        if child.size > width:
            hit = True
            keep = np.argpartition(child, width - 1)[:width]
        else:
            keep = np.arange(child.size)
        keep = keep[np.argsort(child[keep], kind='stable')]
        new_times = child[keep]
        cut = int(np.searchsorted(new_times, horizon, side='right'))
        if cut == 0:
            break
        depth_times.append(float(new_times[0]))
        keep = keep[:cut]
        if keep_paths:
            generations.append((keep // branching, keep % branching, steps.ravel()[keep]))
        times = new_times[:cut]
    return BfsRun(np.asarray(depth_times), generations, hit)

def bfs_path(run, depth):
    # type: (BfsRun, int) -> List[Tuple[int, int]]
    """(child slot, steps) from the root down to the first node at `depth`."""
    path = []  # type: List[Tuple[int, int]]
    index = 0
    for level in range(depth - 1, -1, -1):
        parents, slots, steps = run.generations[level]
        path.append((int(slots[index]), int(steps[index])))
        index = int(parents[index])
    path.reverse()
    return path

ADVERSARIES = {}  # type: Dict[str, Any]

def register_adversary(kind):
    # type: (str) -> Callable[[Any], Any]
    def wrapper(cls):
        # type: (Any) -> Any
        cls.kind = kind
        ADVERSARIES[kind] = cls
        return cls
    return wrapper

def make_adversary(sim, params):
    # type: (Any, Dict[str, Any]) -> Any
    cls = ADVERSARIES.get(params.get('kind'))
    if cls is None:
        raise ConfigError('%r is not an in-loop adversary; choose one of %s'
                          % (params.get('kind'), ', '.join(sorted(ADVERSARIES))))
    return cls(sim, params)

class Adversary(object):
    """Controls every operator entry marked dishonest."""
    kind = None  # type: Optional[str]

    def __init__(self, sim, params):
        # type: (Any, Dict[str, Any]) -> None
        self.sim = sim
        self.params = params
        self.operators = [op for op in sim.operators if not op.honest]
        self.keys = [(op, key) for op in self.operators for key in op.keys]
        if not self.keys:
            raise ConfigError('an adversary needs at least one dishonest validator')
        self.overtook = False
        self.solver_bound_hit = False

    def start(self):
        # type: () -> None
        pass

    def on_public_block(self, block):
        # type: (Any) -> None
        pass

    def on_event(self, payload):
        # type: (Tuple[Any, ...]) -> None
        pass

    def private_height(self):
        # type: () -> Optional[int]
        return None

    def build_block(self, op, key, parent, steps):
        # type: (Any, Any, Any, int) -> Any
        suite = self.sim.suite
        vrf = suite.vrf_eval(key.secret_key, parent.header.puzzle_d)
        fields = suite.issue_solution(vrf.output_r, int(steps))
        return assemble_block(key, parent, [], fields, vrf, suite)

@register_adversary('bfs_private_tree')
class BfsPrivateTree(Adversary):
    """
    Grows a private tree from the public tip and publishes its deepest
    branch the moment that branch is strictly longer than the public
    chain.  A tree that falls `abandon_lag` blocks behind is dropped and
    a new one started from the public tip.  The private blocks never
    conflict publicly, so nothing in this strategy is slashable.
    """

    def __init__(self, sim, params):
        # type: (Any, Dict[str, Any]) -> None
        super(BfsPrivateTree, self).__init__(sim, params)
        self.branching = int(params.get('branching_factor', len(self.keys)))
        if not (1 <= self.branching <= len(self.keys)):
            raise ConfigError('branching_factor must lie in 1..%d (one child per key)'
                              % (len(self.keys),))
        self.width = int(params.get('solver_count', get_setting('SIM_SOLVER_COUNT')))
        self.abandon_lag = int(params.get('abandon_lag', 10))
        speeds = [op.speed for op, _ in self.keys[:self.branching]]
        self.speed = sum(speeds) / len(speeds)
        self.round = 0
        self.root = None  # type: Any
        self.depth = 0
        self.run = None  # type: Optional[BfsRun]
        self.releases = 0

    def start(self):
        # type: () -> None
        self.round += 1
        self.root = self.sim.tree.tip_block
        self.depth = 0
        self.started = self.sim.now
        self.run = bfs_depth_times(self.sim.rng, self.branching, self.sim.gamma_float,
                                   self.speed, self.width, self.sim.duration - self.sim.now,
                                   keep_paths=True)
        if self.run.solver_bound_hit and not self.solver_bound_hit:
            logger.warning('solver bound reached: the private tree is limited to %d solvers',
                           self.width)
        self.solver_bound_hit = self.solver_bound_hit or self.run.solver_bound_hit
        self._schedule(1)

    def _schedule(self, depth):
        # type: (int) -> None
        if depth <= len(self.run.depth_times):
            self.sim.schedule(self.started + self.run.depth_times[depth - 1], 'adversary',
                              (self.round, depth))

    def private_height(self):
        # type: () -> Optional[int]
        return self.root.height + self.depth

    def on_public_block(self, block):
        # type: (Any) -> None
        if self.sim.tree.height - self.private_height() >= self.abandon_lag:
            logger.debug('abandoning private tree at depth %d', self.depth)
            self.start()

    def on_event(self, payload):
        # type: (Tuple[Any, ...]) -> None
        round_id, depth = payload
        if round_id != self.round:
            return
        self.depth = depth
        if self.private_height() > self.sim.tree.height:
            self.release(depth)
            self.start()
        else:
            self._schedule(depth + 1)

    def release(self, depth):
        # type: (int) -> None
        parent = self.root
        for slot, steps in bfs_path(self.run, depth):
            op, key = self.keys[slot]
            block = self.build_block(op, key, parent, steps)
            if not self.sim.publish(block, op, notify_adversary=False):
                return
            parent = block
        self.releases += 1
        if self.sim.tree.tip == parent.digest:
            self.overtook = True
        logger.debug('released a private branch of %d blocks', depth)

@register_adversary('multi_fork')
class MultiFork(Adversary):
    """
    Proposes on the public tip and on side forks rooted at the tip's
    ancestors, one level lower per fork, publishing everything.
    """

    def __init__(self, sim, params):
        # type: (Any, Dict[str, Any]) -> None
        super(MultiFork, self).__init__(sim, params)
        self.forks = int(params.get('forks', 2))
        if self.forks < 1:
            raise ConfigError('multi_fork needs forks >= 1')
        self.generation = 0

    def start(self):
        # type: () -> None
        self.generation += 1
        tip = self.sim.tree.tip_block
        parents = []
        for depth in range(self.forks):
            height = tip.height - depth
            if height < 0:
                break
            parents.append(self.sim.tree.ancestor_at_height(tip.digest, height))
        gamma = self.sim.gamma_float
        for parent in parents:
            steps = self.sim.rng.geometric(gamma, size=len(self.keys))
            times = np.array([s / op.speed for s, (op, _) in zip(steps, self.keys)])
            k = int(np.argmin(times))
            self.sim.schedule(self.sim.now + float(times[k]), 'adversary',
                              (self.generation, parent, k, int(steps[k])))

    def on_public_block(self, block):
        # type: (Any) -> None
        if block.digest == self.sim.tree.tip:
            self.start()

    def on_event(self, payload):
        # type: (Tuple[Any, ...]) -> None
        generation, parent_digest, k, steps = payload
        if generation != self.generation:
            return
        op, key = self.keys[k]
        block = self.build_block(op, key, self.sim.tree.get(parent_digest), steps)
        if not self.sim.publish(block, op):
            # This key has been slashed on that branch; keep the others busy.
            self.start()

def sample_corrupted_stake(rng, alpha_h, p_s, depth, validators, size=None):
    # type: (np.random.Generator, float, float, int, int, Optional[int]) -> Any
    """
    Stake an attacker can buy at the fork height: the adversary's own
    1 - alpha_h plus, for each honest validator, its share of alpha_h
    for every staking event it had in the `depth` heights since (each
    height independently with probability p_s).  Capped at 1.
    """
    shape = (size or 1, validators)
    events = rng.binomial(int(depth), p_s, size=shape).sum(axis=1)
    fraction = np.minimum(1.0, (1 - alpha_h) + events * (alpha_h / validators))
    return fraction if size is not None else float(fraction[0])

LongRangeOutcome = namedtuple('LongRangeOutcome', ['caught_up', 'time_to_overtake',
                                                   'adversary_stake', 'lambda_a',
                                                   'solver_bound_hit'])

def _honest_arrivals(rng, lambda_h, horizon):
    # type: (np.random.Generator, float, float) -> np.ndarray
    n = int(lambda_h * horizon + 10 * np.sqrt(lambda_h * horizon + 1) + 20)
    arrivals = rng.exponential(1 / lambda_h, size=n).cumsum()
    while arrivals[-1] < horizon:
        more = rng.exponential(1 / lambda_h, size=n).cumsum() + arrivals[-1]
        arrivals = np.concatenate([arrivals, more])
    return arrivals

def long_range_trial(rng, params):
    # type: (np.random.Generator, Dict[str, Any]) -> LongRangeOutcome
    lambda_h = float(params['lambda_h'])
    alpha_h = float(params['alpha_h'])
    depth = int(params['depth'])
    horizon = float(params['horizon'])
    if params.get('acquired_stake') is not None:
        stake = float(params['acquired_stake'])
    else:
        stake = sample_corrupted_stake(rng, alpha_h, float(params['p_s']), depth,
                                       int(params.get('honest_validators', 100)))
    lambda_a = lambda_h * stake / alpha_h
    if lambda_a <= 0:
        return LongRangeOutcome(False, None, stake, lambda_a, False)
    branching = int(params.get('branching_factor', 4))
    gamma = float(parse_fraction(params.get('gamma', get_setting('FAST_SIM_GAMMA')), 'gamma'))
    run = bfs_depth_times(rng, branching, gamma, lambda_a / (branching * gamma),
                          int(params.get('solver_count', get_setting('SIM_SOLVER_COUNT'))),
                          horizon)
    honest = _honest_arrivals(rng, lambda_h, horizon)
    if len(run.depth_times) == 0:
        return LongRangeOutcome(False, None, stake, lambda_a, run.solver_bound_hit)
    honest_gain = np.searchsorted(honest, run.depth_times, side='right')
    ahead = np.arange(1, len(run.depth_times) + 1) > depth + honest_gain
    if not ahead.any():
        return LongRangeOutcome(False, None, stake, lambda_a, run.solver_bound_hit)
    first = int(np.argmax(ahead))
    return LongRangeOutcome(True, float(run.depth_times[first]), stake, lambda_a,
                            run.solver_bound_hit)

def run_long_range(config, seeds):
    # type: (Dict[str, Any], Sequence[np.random.SeedSequence]) -> Dict[str, Any]
    """
    The honest chain stands `depth` blocks ahead of the fork point and
    grows as a Poisson process of rate lambda_h.  The attacker, with the
    stake it bought, grows a private tree from the fork point and catches
    up when it is strictly longer.
    """
    params = config['adversary']
    params = dict(params, lambda_h=config.get('lambda_h', params.get('lambda_h', 1.0)),
                  gamma=config.get('gamma', get_setting('FAST_SIM_GAMMA')))
    outcomes = [long_range_trial(np.random.default_rng(seed), params) for seed in seeds]
    times = [o.time_to_overtake for o in outcomes if o.caught_up]
    stakes = np.asarray([o.adversary_stake for o in outcomes])
    return {
        'trials': len(outcomes),
        'caught_up': sum(1 for o in outcomes if o.caught_up),
        'overtake_rate': (len(times) / len(outcomes)) if outcomes else 0.0,
        'median_time_to_overtake': float(np.median(times)) if times else None,
        'mean_adversary_stake': float(stakes.mean()) if len(stakes) else None,
        'solver_bound_hit': any(o.solver_bound_hit for o in outcomes),
        'outcomes': [o._asdict() for o in outcomes],
    }

def run_bfs_adversary(config, seeds):
    # type: (Dict[str, Any], Sequence[np.random.SeedSequence]) -> Dict[str, Any]
    """Samples of the private tree's depth D_a(T) after time T."""
    params = config['adversary']
    lambda_a = float(params.get('lambda_a', config.get('lambda_a', 1.0)))
    branching = int(params.get('branching_factor', 1))
    width = int(params.get('solver_count', get_setting('SIM_SOLVER_COUNT')))
    horizon = float(config.get('duration', get_setting('SIM_DURATION')))
    gamma = float(parse_fraction(config.get('gamma', get_setting('FAST_SIM_GAMMA')), 'gamma'))
    speed = lambda_a / (branching * gamma)
    depths = []
    hits = 0
    for seed in seeds:
        run = bfs_depth_times(np.random.default_rng(seed), branching, gamma, speed, width,
                              horizon)
        depths.append(len(run.depth_times))
        hits += int(run.solver_bound_hit)
    if hits:
        logger.warning('solver bound reached in %d of %d trials', hits, len(depths))
    arr = np.asarray(depths, dtype=float)
    return {
        'trials': len(depths),
        'lambda_a': lambda_a,
        'branching_factor': branching,
        'T': horizon,
        'depths': depths,
        'mean_depth': float(arr.mean()) if len(arr) else None,
        'growth_rate': float(arr.mean() / horizon) if len(arr) else None,
        'solver_bound_hits': hits,
    }

# The protocol-following proposer: no equivocation, extends the selected tip.
HONEST = 'honest'

class _ForkEconomy(object):
    """One scripted fork race: a root block, one fork per scenario entry,
    each opened by an honest block and then carrying the adversary's
    blocks, and the winning fork extended until it confirms everything."""

    def __init__(self, scenario, kappa_con):
        # type: (econ.ForkScenario, int) -> None
        self.scenario = scenario
        self.suite = SimulationSuite(b'vdpchain/fork-economy')
        self.adversary = self.suite.keygen(b'fork-economy/adversary')
        self.honest = [self.suite.keygen(b'fork-economy/honest/%d' % (i,))
                       for i in range(len(scenario.forks) + 1)]
        self.config = ChainConfig(kappa_con=kappa_con,
                                  stake_amount=get_setting('CHAIN_STAKE_AMOUNT'),
                                  lock_blocks=get_setting('CHAIN_LOCK_DAYS') *
                                  get_setting('CHAIN_BLOCKS_PER_DAY'),
                                  block_reward=int(scenario.block_reward),
                                  epsilon=scenario.epsilon, puzzle=None,
                                  slash_orphans=True).validate()
        balance = get_setting('CHAIN_INITIAL_BALANCE')
        allocations = [(k.public_key, balance, True) for k in [self.adversary] + self.honest]
        self.genesis, self.genesis_ledger = make_genesis(self.config, allocations, self.suite)

    def _extend(self, store, parent, key, txs=()):
        # type: (BlockStore, Any, Any, Sequence[Any]) -> Any
        vrf = self.suite.vrf_eval(key.secret_key, parent.header.puzzle_d)
        fields = self.suite.issue_solution(vrf.output_r, 1)
        block = assemble_block(key, parent, txs, fields, vrf, self.suite)
        verdict = store.admit(block)
        if not verdict:
            raise SimError('scripted block rejected: %s' % (verdict.reason,))
        store.tree.insert_block(block)
        return block

    def _publish_forks(self, store, strategy):
        # type: (BlockStore, Any) -> List[Any]
        root = self._extend(store, self.genesis, self.honest[-1])
        tips = []
        for i, fork in enumerate(self.scenario.forks, 1):
            block = self._extend(store, root, self.honest[i - 1])
            mined = fork.prospective if strategy in (econ.ALL_FORKS, i) else 0
            for _ in range(fork.published + mined):
                block = self._extend(store, block, self.adversary)
            tips.append(block)
        return tips

    def fork_choice(self):
        # type: () -> int
        """The fork whose tip the fork-choice rule picks once the
        already-published blocks are out: longest, earliest on ties."""
        store = BlockStore(self.config, self.suite, BlockTree(self.genesis), self.genesis_ledger)
        tips = [b.digest for b in self._publish_forks(store, None)]
        return tips.index(store.tree.tip) + 1

    def realized_reward(self, strategy, winner):
        # type: (Any, int) -> int
        tree = BlockTree(self.genesis)
        store = BlockStore(self.config, self.suite, tree, self.genesis_ledger)
        tips = self._publish_forks(store, None if strategy == HONEST else strategy)
        if strategy == HONEST:
            # Prospective blocks go only on the tip this view selects.
            chosen = [b.digest for b in tips].index(tree.tip)
            block = tips[chosen]
            for _ in range(self.scenario.forks[chosen].prospective):
                block = self._extend(store, block, self.adversary)
            tips[chosen] = block
        longest = max(b.height for b in tips)
        tip = tips[winner - 1]
        extender = self.honest[winner - 1]
        while tip.height <= longest:
            tip = self._extend(store, tip, extender)
        evidence = orphan_evidence(tree, tip.digest, self.adversary.public_key,
                                   submitter_pk=self.adversary.public_key)
        tip = self._extend(store, tip, extender, [SlashTx(e) for e in evidence])
        for _ in range(self.config.kappa_con + longest):
            tip = self._extend(store, tip, extender)
        before = self.genesis_ledger.holdings(self.adversary.public_key)
        return store.state(tip.digest).holdings(self.adversary.public_key) - before

def run_multi_fork_economics(config, seeds):
    # type: (Dict[str, Any], Sequence[np.random.SeedSequence]) -> Dict[str, Any]
    """
    Realized adversary rewards per strategy through the real block,
    ledger and slashing code.  Every trial draws one winning fork and
    plays every strategy against that same draw.
    """
    scenario = econ.ForkScenario.from_dict(config['scenario'])
    economy = _ForkEconomy(scenario, int(config.get('kappa_con', 2)))
    k = len(scenario.forks)
    probs = np.asarray([float(f.win_prob) for f in scenario.forks])
    probs = probs / probs.sum()
    chosen = economy.fork_choice()
    strategies = [econ.ALL_FORKS] + list(range(1, k + 1))

    cache = {}  # type: Dict[Tuple[Any, int], int]
    def reward(strategy, winner):
        # type: (Any, int) -> int
        if (strategy, winner) not in cache:
            cache[(strategy, winner)] = economy.realized_reward(strategy, winner)
        return cache[(strategy, winner)]

    winners = [int(np.random.default_rng(seed).choice(k, p=probs)) + 1 for seed in seeds]
    results = {}  # type: Dict[str, Any]
    for strategy in strategies + [HONEST]:
        samples = np.asarray([reward(strategy, w) for w in winners], dtype=float)
        if strategy == econ.ALL_FORKS:
            expected = econ.reward_all_forks(scenario)
        elif strategy == HONEST:
            expected = econ.reward_single_fork(scenario, chosen)
        else:
            expected = econ.reward_single_fork(scenario, strategy)
        name = strategy if isinstance(strategy, str) else 'single(%d)' % (strategy,)
        results[name] = {
            'mean': float(samples.mean()),
            'std': float(samples.std(ddof=1)) if len(samples) > 1 else 0.0,
            'stderr': float(samples.std(ddof=1) / np.sqrt(len(samples))) if len(samples) > 1 else 0.0,
            'expected': float(expected),
        }
    return {'trials': len(winners), 'block_reward': float(scenario.block_reward),
            'epsilon': float(scenario.epsilon), 'honest_fork': chosen,
            'strategies': results}
