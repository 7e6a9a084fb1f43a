"""
The discrete-event simulator.

Every operator entry of the config owns `stake_fraction * U` validator
keys, where U is the least common denominator of the stake fractions,
and each key solves at the entry's speed.  An operator keeps one view of
the chain (its tip) and, while following the protocol, works on the
puzzle derived from that tip with all of its keys at once; the first key
to finish proposes.  A tip change cancels the pending solve and starts a
new one.

In fast mode (`fast_statistical`) a solve takes Geometric(gamma) steps,
sampled rather than computed, and blocks are built with the simulation
suite.  In `real_crypto` mode every solve squares for real over a small
modulus and blocks carry real VRF proofs and signatures.  Either way each
block goes through the chain module's validation, ledger and slashing
code, so token conservation is checked at every block.

All published blocks live in one public tree; each view is a tip into it
(a view only ever holds blocks it has received, and it receives blocks
after their ancestors).  Delivery is immediate when round_delta is 0 and
delayed by round_delta otherwise.
"""
from __future__ import absolute_import
from __future__ import division

from collections import OrderedDict, namedtuple
from typing import Any, Dict, List, Optional, Sequence, Tuple

import heapq
import itertools
import logging
import math

import numpy as np
import ujson

from vdpchain.exceptions import ConfigError, LedgerError, SimError
from vdpchain.lib import adversary as adversaries
from vdpchain.lib.blocks import SlashTx
from vdpchain.lib.chain import (
    BlockStore, BlockTree, ChainConfig, assemble_block, make_genesis,
)
from vdpchain.lib.config import format_fraction, get_setting, parse_fraction, validate_config
from vdpchain.lib.ledger import apply_slashing, check_slashable
from vdpchain.lib.metrics import (
    MetricsReport, heights_at, measure_chain_quality, measure_growth, prefix_depth,
    rollback_depth, summarize_trials,
)
from vdpchain.lib.parallel import run_parallel
from vdpchain.lib.slashing import detect_equivocation, evidence_target, validate_evidence
from vdpchain.lib.suites import RealSuite, SimulationSuite
from vdpchain.lib.validator import (
    check_bool, check_choice, check_dict, check_float, check_fraction, check_int,
    check_list, check_none_or, check_range, check_string,
)
from vdpchain.lib.vdf_core import default_vdf_params
from vdpchain.lib.vdp import default_puzzle_params

logger = logging.getLogger('vdpchain.sim')

FAST = 'fast_statistical'
REAL = 'real_crypto'
MODE_ALIASES = {'fast': FAST, FAST: FAST, 'real': REAL, REAL: REAL}

EXPERIMENTS = ['backbone', 'bfs_tail', 'long_range', 'multi_fork_economics']
ADVERSARY_KINDS = ['bfs_private_tree', 'long_range', 'multi_fork']

MAX_KEYS = 4096

# Event log kinds.
SOLVE_COMPLETE = 'solve-complete'
BLOCK_PUBLISHED = 'block-published'
BLOCK_RECEIVED = 'block-received'
CANCEL = 'cancel'
SLASH_SUBMITTED = 'slash-submitted'

ValidatorSpec = namedtuple('ValidatorSpec', ['stake_fraction', 'solver_speed', 'honest'])

SIM_FIELDS = ['validators', 'gamma', 'mode', 'duration', 'round_delta', 'rng_seed',
              'kappa_con', 'adversary', 'chain', 'sample_points', 'quality_window',
              'common_prefix_k', 'growth_rounds', 'record_events', 'trials',
              'initial_balance', 'experiment']

check_validator_entry = check_dict([
    ('stake_fraction', check_fraction),
    ('solver_speed', check_range(check_float, low=0, low_inclusive=False)),
], [
    ('honest', check_bool),
])

check_sim_config = check_dict([
    ('validators', check_list(check_validator_entry)),
], [
    ('gamma', check_fraction),
    ('mode', check_choice(sorted(MODE_ALIASES))),
    ('duration', check_range(check_float, low=0, low_inclusive=False)),
    ('round_delta', check_range(check_float, low=0)),
    ('rng_seed', check_range(check_int, low=0)),
    ('kappa_con', check_range(check_int, low=0)),
    ('adversary', check_none_or(check_dict([('kind', check_choice(ADVERSARY_KINDS))]))),
    ('chain', check_dict([])),
    ('sample_points', check_range(check_int, low=2)),
    ('quality_window', check_range(check_int, low=1)),
    ('common_prefix_k', check_none_or(check_range(check_int, low=0))),
    ('growth_rounds', check_range(check_int, low=1)),
    ('record_events', check_bool),
    ('trials', check_range(check_int, low=1)),
    ('initial_balance', check_range(check_int, low=0)),
    ('experiment', check_choice(EXPERIMENTS)),
    ('jobs', check_range(check_int, low=1)),
    ('seed', check_int),
    ('lambda_h', check_float),
    ('lambda_a', check_float),
    ('scenario', check_dict([])),
    ('description', check_string),
])

class SimConfig(namedtuple('SimConfig', SIM_FIELDS)):
    __slots__ = ()

    @property
    def honest_validators(self):
        # type: () -> List[ValidatorSpec]
        return [v for v in self.validators if v.honest]

    def to_dict(self):
        # type: () -> Dict[str, Any]
        d = self._asdict()
        d['validators'] = [{'stake_fraction': format_fraction(v.stake_fraction),
                            'solver_speed': v.solver_speed, 'honest': v.honest}
                           for v in self.validators]
        d['gamma'] = format_fraction(self.gamma)
        return dict(d)

def parse_sim_config(d):
    # type: (Dict[str, Any]) -> SimConfig
    validate_config(d, check_sim_config, 'sim config')
    validators = [ValidatorSpec(parse_fraction(v['stake_fraction'], 'stake_fraction'),
                                float(v['solver_speed']), bool(v.get('honest', True)))
                  for v in d['validators']]
    if not validators:
        raise ConfigError('a simulation needs at least one validator')
    if any(v.stake_fraction <= 0 for v in validators):
        raise ConfigError('every stake_fraction must be positive')
    if sum(v.stake_fraction for v in validators) != 1:
        raise ConfigError('stake fractions must sum to 1, got %s'
                          % (format_fraction(sum(v.stake_fraction for v in validators)),))
    gamma = parse_fraction(d.get('gamma', get_setting('FAST_SIM_GAMMA')), 'gamma')
    if not (0 < gamma <= 1):
        raise ConfigError('gamma must lie in (0, 1]')
    config = SimConfig(
        validators=validators,
        gamma=gamma,
        mode=MODE_ALIASES[d.get('mode', FAST)],
        duration=float(d.get('duration', get_setting('SIM_DURATION'))),
        round_delta=float(d.get('round_delta', get_setting('SIM_ROUND_DELTA'))),
        rng_seed=int(d.get('rng_seed', get_setting('SIM_RNG_SEED'))),
        kappa_con=int(d.get('kappa_con', get_setting('CHAIN_KAPPA_CON'))),
        adversary=d.get('adversary'),
        chain=d.get('chain', {}),
        sample_points=int(d.get('sample_points', get_setting('SIM_SAMPLE_POINTS'))),
        quality_window=int(d.get('quality_window', get_setting('SIM_QUALITY_WINDOW'))),
        common_prefix_k=d.get('common_prefix_k'),
        growth_rounds=int(d.get('growth_rounds', 10)),
        record_events=bool(d.get('record_events', False)),
        trials=int(d.get('trials', 1)),
        initial_balance=int(d.get('initial_balance', get_setting('CHAIN_INITIAL_BALANCE'))),
        experiment=d.get('experiment', 'backbone'))
    if config.mode == REAL and config.adversary is not None:
        raise ConfigError('adversaries run in fast_statistical mode only')
    stake_units(config)
    return config

def stake_units(config):
    # type: (SimConfig) -> int
    """The number of keys one whole unit of stake is split into."""
    units = 1
    for v in config.validators:
        d = v.stake_fraction.denominator
        units = units * d // math.gcd(units, d)
    if units > MAX_KEYS:
        raise ConfigError('stake fractions need %d keys; at most %d are supported'
                          % (units, MAX_KEYS))
    return units

class EventLog(object):
    """Records (time, seq, actor, kind, digest) in the order the event
    loop handled them.  A disabled log keeps only the block publications
    (enough to replay the tree)."""

    def __init__(self, enabled=False):
        # type: (bool) -> None
        self.enabled = enabled
        self.records = []  # type: List[Tuple[float, int, str, str, bytes]]

    def record(self, time, actor, kind, digest):
        # type: (float, str, str, bytes) -> None
        if self.enabled or kind == BLOCK_PUBLISHED:
            self.records.append((time, len(self.records), actor, kind, digest))

    def published(self):
        # type: () -> List[bytes]
        return [r[4] for r in self.records if r[3] == BLOCK_PUBLISHED]

    def counts(self):
        # type: () -> Dict[str, int]
        counts = {}  # type: Dict[str, int]
        for r in self.records:
            counts[r[3]] = counts.get(r[3], 0) + 1
        return counts

    def to_dicts(self):
        # type: () -> List[Dict[str, Any]]
        return [{'time': t, 'seq': seq, 'actor': actor, 'kind': kind, 'digest': digest.hex()}
                for t, seq, actor, kind, digest in self.records]

    def write_ndjson(self, path):
        # type: (str) -> None
        with open(path, 'w') as f:
            for record in self.to_dicts():
                f.write(ujson.dumps(record, sort_keys=True))
                f.write('\n')

def replay_event_log(log, store):
    # type: (EventLog, BlockStore) -> BlockTree
    """Rebuilds the public tree by inserting the published blocks in
    logged order.  `store` supplies the block bodies."""
    tree = BlockTree(store.tree.genesis)
    for digest in log.published():
        block = store.tree.get(digest)
        if block is None:
            raise SimError('event log names an unknown block %s' % (digest.hex()[:12],))
        tree.insert_block(block)
    return tree

class Operator(object):
    def __init__(self, index, spec, keys):
        # type: (int, ValidatorSpec, List[Any]) -> None
        self.index = index
        self.name = 'v%d' % (index,)
        self.stake_fraction = spec.stake_fraction
        self.speed = spec.solver_speed
        self.honest = spec.honest
        self.keys = keys
        self.tip = b''
        self.confirmed = None  # type: Optional[bytes]
        self.generation = 0
        self.pending = False
        self.pool = OrderedDict()  # type: OrderedDict

class Simulation(object):
    def __init__(self, config, seed=None):
        # type: (SimConfig, Any) -> None
        self.config = config
        self.rng = np.random.default_rng(seed if seed is not None else config.rng_seed)
        self.gamma_float = float(config.gamma)
        self.duration = config.duration
        self.now = 0.0
        self._queue = []  # type: List[Tuple[float, float, int, str, Any]]
        self._seq = itertools.count()
        self.log = EventLog(config.record_events)

        if config.mode == REAL:
            vdf = default_vdf_params(modulus_bits=get_setting('SIM_REAL_MODULUS_BITS'),
                                     security_param=get_setting('SIM_REAL_SECURITY_PARAM'))
            puzzle = default_puzzle_params(gamma=config.gamma, vdf=vdf)
            self.suite = RealSuite(puzzle)  # type: Any
        else:
            puzzle = None
            self.suite = SimulationSuite(b'vdpchain/sim-oracle/%d' % (config.rng_seed,))
        chain = dict(config.chain)
        chain['kappa_con'] = config.kappa_con
        self.chain_config = ChainConfig.from_dict(chain, puzzle=puzzle)

        units = stake_units(config)
        self.operators = []  # type: List[Operator]
        for i, spec in enumerate(config.validators):
            count = int(spec.stake_fraction * units)
            keys = [self.suite.keygen(b'vdpchain/sim/%d/%d/%d' % (config.rng_seed, i, k))
                    for k in range(count)]
            self.operators.append(Operator(i, spec, keys))
        allocations = [(key.public_key, config.initial_balance, True)
                       for op in self.operators for key in op.keys]
        self.genesis, self.genesis_ledger = make_genesis(self.chain_config, allocations, self.suite)
        self.tree = BlockTree(self.genesis)
        self.store = BlockStore(self.chain_config, self.suite, self.tree, self.genesis_ledger)
        self.owner = dict((key.public_key, op) for op in self.operators for key in op.keys)
        for op in self.operators:
            op.tip = self.genesis.digest

        self.adversary = None  # type: Any
        if config.adversary is not None:
            self.adversary = adversaries.make_adversary(self, config.adversary)
        self.protocol_operators = [op for op in self.operators
                                   if op.honest or self.adversary is None]
        self.honest_operators = [op for op in self.operators if op.honest]
        if not self.honest_operators:
            raise ConfigError('a simulation needs at least one honest validator')

        # Metrics state.
        self.published_counts = [0] * len(self.operators)
        self.n_h = 0
        self.honest_heights = {}  # type: Dict[int, int]
        self.injected = 0
        self.detected = 0
        self.cancelled = 0
        self.reversions = 0
        self.max_reorg = 0
        self.cp_violations = 0
        self._sampled_tips = []  # type: List[bytes]
        self._evidence = {}  # type: Dict[bytes, List[Any]]
        self.trajectory = []  # type: List[List[float]]
        self.height_times = [0.0]
        self.height_values = [0]

    def schedule(self, time, kind, payload, tiebreak=0.0):
        # type: (float, str, Any, float) -> None
        if time <= self.duration:
            heapq.heappush(self._queue, (time, tiebreak, next(self._seq), kind, payload))

    def restart(self, ops):
        # type: (Sequence[Operator]) -> None
        """Cancels the pending solve of each of `ops` and starts a solve
        on its current tip with every key still active there."""
        if not ops:
            return
        for op in ops:
            if op.pending:
                self.cancelled += 1
                self.log.record(self.now, op.name, CANCEL, op.tip)
            op.generation += 1
            op.pending = False
        if self.config.mode == REAL:
            for op in ops:
                self._restart_real(op)
            return
        active = [(op, [k for k, key in enumerate(op.keys)
                        if self.store.state(op.tip).is_active(key.public_key)]) for op in ops]
        total = sum(len(keys) for _, keys in active)
        if total == 0:
            return
        steps = self.rng.geometric(self.gamma_float, size=total)
        offset = 0
        for op, keys in active:
            if not keys:
                continue
            mine = steps[offset:offset + len(keys)]
            offset += len(keys)
            j = int(np.argmin(mine))
            self._schedule_solve(op, keys[j], int(mine[j]), None)

    def _restart_real(self, op):
        # type: (Operator) -> None
        parent = self.tree.get(op.tip)
        state = self.store.state(op.tip)
        best = None  # type: Any
        for k, key in enumerate(op.keys):
            if not state.is_active(key.public_key):
                continue
            vrf = self.suite.vrf_eval(key.secret_key, parent.header.puzzle_d)
            fields = self.suite.solve(vrf.output_r)
            if best is None or fields.t < best[1].t:
                best = (k, fields, vrf)
        if best is not None:
            self._schedule_solve(op, best[0], best[1].t, (best[1], best[2]))

    def _schedule_solve(self, op, key_index, steps, solved):
        # type: (Operator, int, int, Any) -> None
        op.pending = True
        self.schedule(self.now + steps / op.speed, 'solve',
                      (op.index, op.generation, key_index, steps, solved),
                      tiebreak=float(self.rng.random()))

    def run(self):
        # type: () -> MetricsReport
        logger.info('simulating %d validators (%d keys) for T=%s in %s mode',
                    len(self.operators), len(self.owner), self.duration, self.config.mode)
        for t in np.linspace(0, self.duration, self.config.sample_points):
            self.schedule(float(t), 'sample', None, tiebreak=1.0)
        self.restart(self.protocol_operators)
        if self.adversary is not None:
            self.adversary.start()
        while self._queue:
            time, _, _, kind, payload = heapq.heappop(self._queue)
            self.now = time
            if kind == 'solve':
                self.on_solve(*payload)
            elif kind == 'deliver':
                self.receive(self.operators[payload[0]], payload[1])
            elif kind == 'adversary':
                self.adversary.on_event(payload)
            elif kind == 'sample':
                self.sample()
        report = self.report()
        logger.info('simulation finished: height %d, %d blocks published, %d slashings',
                    report.final_height, sum(self.published_counts), report.slashing_events)
        return report

    def on_solve(self, op_index, generation, key_index, steps, solved):
        # type: (int, int, int, int, Any) -> None
        op = self.operators[op_index]
        if generation != op.generation:
            return
        op.pending = False
        key = op.keys[key_index]
        parent = self.tree.get(op.tip)
        self.log.record(self.now, op.name, SOLVE_COMPLETE, parent.digest)
        if solved is not None:
            fields, vrf = solved
        else:
            vrf = self.suite.vrf_eval(key.secret_key, parent.header.puzzle_d)
            fields = self.suite.issue_solution(vrf.output_r, steps)
        txs = self.evidence_txs(op, parent)
        block = assemble_block(key, parent, txs, fields, vrf, self.suite)
        if txs:
            self.log.record(self.now, op.name, SLASH_SUBMITTED, block.digest)
        if not self.publish(block, op):
            self.restart([op])

    def evidence_txs(self, op, parent):
        # type: (Operator, Any) -> List[SlashTx]
        """Pooled evidence that applies on top of `parent`, in pool order."""
        txs = []  # type: List[SlashTx]
        ledger = self.store.state(parent.digest)
        for ident, evidence in list(op.pool.items()):
            try:
                target = validate_evidence(evidence, self.tree, parent.digest,
                                           self.chain_config, self.suite)
                ledger, _ = apply_slashing(ledger, evidence, self.chain_config,
                                           target=target, height=parent.height + 1)
            except LedgerError:
                continue
            txs.append(SlashTx(evidence))
        return txs

    def publish(self, block, op, notify_adversary=True):
        # type: (Any, Operator, bool) -> bool
        verdict = self.store.admit(block)
        if not verdict:
            if op in self.protocol_operators:
                raise SimError('block by %s failed validation: %s' % (op.name, verdict.reason))
            logger.debug('dropping invalid block by %s: %s', op.name, verdict.reason)
            return False
        self.tree.insert_block(block)
        self.published_counts[op.index] += 1
        self.log.record(self.now, op.name, BLOCK_PUBLISHED, block.digest)
        if op.honest:
            self.n_h += 1
            self.honest_heights[block.height] = self.honest_heights.get(block.height, 0) + 1

        conflicts = self.tree.conflicts_of(block.digest)
        evidence = detect_equivocation(self.tree, block)
        if conflicts:
            self.injected += 1
            if evidence:
                self.detected += 1
        if evidence:
            self._evidence[block.digest] = evidence

        self.receive(op, block.digest)
        for other in self.operators:
            if other is op or not (other.honest or self.adversary is None):
                continue
            if self.config.round_delta == 0:
                self.receive(other, block.digest)
            else:
                self.schedule(self.now + self.config.round_delta, 'deliver',
                              (other.index, block.digest))
        if notify_adversary and self.adversary is not None:
            self.adversary.on_public_block(block)
        return True

    def receive(self, op, digest):
        # type: (Operator, bytes) -> None
        block = self.tree.get(digest)
        if self.owner[block.proposer_pk] is not op:
            self.log.record(self.now, op.name, BLOCK_RECEIVED, digest)
        for evidence in self._evidence.get(digest, []):
            ident = (evidence.kind, tuple(evidence.ref_digests()))
            if ident not in op.pool:
                op.pool[ident] = evidence._replace(submitter_pk=op.keys[0].public_key)
        if block.height <= self.tree.get(op.tip).height:
            return
        old_tip = op.tip
        op.tip = digest
        lca = self.tree.get(self.tree.common_ancestor(old_tip, digest)).height
        self.max_reorg = max(self.max_reorg, self.tree.get(old_tip).height - lca)
        kappa = self.config.kappa_con
        if block.height >= kappa:
            confirmed = self.tree.ancestor_at_height(digest, block.height - kappa)
            if op.confirmed is not None and not self.tree.is_ancestor(op.confirmed, digest):
                self.reversions += 1
                logger.warning('%s lost a confirmed block at height %d',
                               op.name, self.tree.get(op.confirmed).height)
            op.confirmed = confirmed
        self.prune_pool(op)
        if op.honest and block.height > self.height_values[-1]:
            self.height_times.append(self.now)
            self.height_values.append(block.height)
        if op in self.protocol_operators:
            self.restart([op])

    def prune_pool(self, op):
        # type: (Operator) -> None
        """Drops evidence already applied (or moot) at the confirmed state."""
        if op.confirmed is None or not op.pool:
            return
        ledger = self.store.state(op.confirmed)
        for ident, evidence in list(op.pool.items()):
            target = evidence_target(evidence, self.tree, op.confirmed)
            if target is None:
                continue
            try:
                check_slashable(ledger, evidence.offender_pk, target)
            except LedgerError:
                del op.pool[ident]

    def sample(self):
        # type: () -> None
        heights = [self.tree.get(op.tip).height for op in self.honest_operators]
        d_h = max(heights)
        d_a = 0
        if self.adversary is not None:
            d_a = self.adversary.private_height() or 0
        self.trajectory.append([self.now, d_h, d_a, self.n_h, d_h - d_a])
        depth = 0
        tips = [op.tip for op in self.honest_operators]
        for a, b in itertools.combinations(tips, 2):
            depth = max(depth, prefix_depth(self.tree, a, b))
        # Views sampled earlier must survive, k blocks short, in every later view.
        for a in self._sampled_tips:
            for b in tips:
                depth = max(depth, rollback_depth(self.tree, a, b))
        self._sampled_tips = tips
        self.max_reorg = max(self.max_reorg, depth)
        k = self.config.common_prefix_k
        if k is not None and depth > k:
            self.cp_violations += 1

    def report(self):
        # type: () -> MetricsReport
        config = self.config
        view = self.honest_operators[0]
        chain = self.tree.chain_to(view.tip)[1:]
        owners = [self.owner[b.proposer_pk] for b in chain]
        counts = [0] * len(self.operators)
        for op in owners:
            counts[op.index] += 1
        total = max(1, len(chain))

        quality = None  # type: Optional[float]
        window = config.quality_window
        if len(chain) >= window:
            quality = measure_chain_quality([op.honest for op in owners], window)
        else:
            logger.warning('chain of %d blocks is shorter than the quality window %d',
                           len(chain), window)

        round_length = config.round_delta or 1.0
        boundaries = np.arange(0, config.duration + 1e-9, round_length)
        growth = None  # type: Optional[float]
        if len(boundaries) > config.growth_rounds:
            growth = measure_growth(heights_at(boundaries, self.height_times, self.height_values),
                                    config.growth_rounds)

        state = self.store.state(view.tip)
        dishonest_keys = [key.public_key for op in self.operators if not op.honest
                          for key in op.keys]
        net_reward = sum(state.holdings(pk) - self.genesis_ledger.holdings(pk)
                         for pk in dishonest_keys)
        receipts = [r for b in chain for r in self.store.receipts.get(b.digest, [])]

        speeds = dict((op.index, op.speed * len(op.keys)) for op in self.operators)
        honest_speed = sum(speeds[op.index] for op in self.operators if op.honest)
        adversary_speed = sum(speeds[op.index] for op in self.operators if not op.honest)
        honest_published = sum(self.published_counts[op.index] for op in self.honest_operators)

        return MetricsReport(
            config=config.to_dict(),
            duration=config.duration,
            validators=len(self.operators),
            block_counts=counts,
            published_counts=list(self.published_counts),
            block_rates=[c / config.duration for c in counts],
            shares=[c / total for c in counts],
            lambda_h=honest_published / config.duration,
            lambda_a=(sum(self.published_counts) - honest_published) / config.duration,
            lambda_h_expected=self.gamma_float * honest_speed,
            lambda_a_expected=self.gamma_float * adversary_speed,
            final_height=len(chain),
            orphaned_blocks=len(self.tree) - 1 - len(chain),
            trajectory=self.trajectory,
            gap_samples=[row[4] for row in self.trajectory],
            chain_quality=quality,
            common_prefix_k=self.max_reorg,
            common_prefix_violations=self.cp_violations,
            confirmed_reversions=self.reversions,
            growth_tau=growth,
            honest_height_collisions=sum(1 for c in self.honest_heights.values() if c > 1),
            adversary_net_reward=net_reward,
            slashing_events=len(receipts),
            slashed_total=sum(r.burned for r in receipts),
            submitter_rewards=sum(r.submitter_reward for r in receipts),
            equivocations_injected=self.injected,
            equivocations_detected=self.detected,
            conservation_checks=self.store.states_checked,
            solver_bound_hit=bool(self.adversary is not None and self.adversary.solver_bound_hit),
            success=bool(self.adversary is not None and self.adversary.overtook),
            cancelled_solves=self.cancelled)

def run_sim(config, seed=None):
    # type: (SimConfig, Any) -> Tuple[MetricsReport, EventLog]
    sim = Simulation(config, seed)
    return sim.run(), sim.log

def trial_seeds(rng_seed, trials):
    # type: (int, int) -> List[np.random.SeedSequence]
    return np.random.SeedSequence(rng_seed).spawn(trials)

def _map_trials(job, items, jobs):
    # type: (Any, Sequence[Any], int) -> List[Any]
    if jobs <= 1 or len(items) <= 1:
        return [job(item) for item in items]
    results = {}  # type: Dict[int, Any]
    for status, item, result in run_parallel(job, list(enumerate(items)), threads=jobs):
        if status != 0:
            raise SimError('trial %d failed' % (item[0],))
        results[item[0]] = result
    return [results[i] for i in range(len(items))]

def _indexed(job):
    # type: (Any) -> Any
    def wrapped(item):
        # type: (Any) -> Any
        if isinstance(item, tuple):
            return job(item[1])
        return job(item)
    return wrapped

def run_trials(config, jobs=1):
    # type: (SimConfig, int) -> Tuple[List[MetricsReport], Dict[str, Any]]
    """Independent trials, each seeded from one child of rng_seed."""
    seeds = trial_seeds(config.rng_seed, config.trials)
    reports = _map_trials(_indexed(lambda seed: run_sim(config, seed)[0]), seeds, jobs)
    for i, report in enumerate(reports):
        logger.info('trial %d: height %d, chain quality %s', i, report.final_height,
                    report.chain_quality)
    return reports, summarize_trials(reports)

def _chunked(seeds, jobs):
    # type: (Sequence[Any], int) -> List[List[Any]]
    size = max(1, -(-len(seeds) // max(1, jobs)))
    return [list(seeds[i:i + size]) for i in range(0, len(seeds), size)]

def run_experiment(raw, jobs=1):
    # type: (Dict[str, Any], int) -> Dict[str, Any]
    """Dispatches on `experiment`; the result is the JSON the sim
    command writes."""
    experiment = raw.get('experiment', 'backbone')
    if experiment not in EXPERIMENTS:
        raise ConfigError('unknown experiment %r' % (experiment,))
    trials = int(raw.get('trials', 1))
    seed = int(raw.get('rng_seed', get_setting('SIM_RNG_SEED')))
    if experiment == 'backbone':
        config = parse_sim_config(raw)
        if config.trials == 1:
            report, log = run_sim(config)
            return {'experiment': experiment, 'report': report, 'log': log}
        reports, summary = run_trials(config, jobs)
        return {'experiment': experiment, 'reports': reports, 'summary': summary,
                'config': config.to_dict()}

    runners = {
        'bfs_tail': adversaries.run_bfs_adversary,
        'long_range': adversaries.run_long_range,
        'multi_fork_economics': adversaries.run_multi_fork_economics,
    }
    if experiment != 'multi_fork_economics' and 'adversary' not in raw:
        raise ConfigError('the %s experiment needs an adversary section' % (experiment,))
    if experiment == 'multi_fork_economics' and 'scenario' not in raw:
        raise ConfigError('the multi_fork_economics experiment needs a scenario')
    runner = runners[experiment]
    seeds = trial_seeds(seed, trials)
    if experiment == 'multi_fork_economics' or jobs <= 1:
        result = runner(raw, seeds)
    else:
        parts = _map_trials(_indexed(lambda chunk: runner(raw, chunk)), _chunked(seeds, jobs), jobs)
        result = merge_results(parts)
    result['experiment'] = experiment
    result['config'] = raw
    return result

def merge_results(parts):
    # type: (List[Dict[str, Any]]) -> Dict[str, Any]
    """Joins chunked bfs_tail or long_range results."""
    merged = dict(parts[0])
    if 'depths' in merged:
        depths = [d for p in parts for d in p['depths']]
        arr = np.asarray(depths, dtype=float)
        merged.update(trials=len(depths), depths=depths, mean_depth=float(arr.mean()),
                      growth_rate=float(arr.mean() / merged['T']),
                      solver_bound_hits=sum(p['solver_bound_hits'] for p in parts))
    else:
        outcomes = [o for p in parts for o in p['outcomes']]
        times = [o['time_to_overtake'] for o in outcomes if o['caught_up']]
        stakes = [o['adversary_stake'] for o in outcomes]
        merged.update(trials=len(outcomes), outcomes=outcomes, caught_up=len(times),
                      overtake_rate=len(times) / len(outcomes),
                      median_time_to_overtake=float(np.median(times)) if times else None,
                      mean_adversary_stake=float(np.mean(stakes)),
                      solver_bound_hit=any(p['solver_bound_hit'] for p in parts))
    return merged
