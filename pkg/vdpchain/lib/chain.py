"""
The chain protocol: configuration, block assembly and validation, the
block tree with longest-chain fork choice, and confirmation.

Validation runs the header checks in a fixed order and reports the first
one that fails:

  1. the proposer holds exactly S at the parent's ledger state
  2. the VRF verifies against the parent's puzzle output
  3. the puzzle solution verifies for the VRF output
  4. the header signature verifies under the same key as the VRF
  5. the Merkle root matches the transactions
  6. every transaction applies to the branch's ledger

A block's post-state is its parent's ledger with its transactions
applied and the block reward minted to whichever block on its branch
just reached kappa_con confirmations.
"""
from __future__ import absolute_import

from collections import namedtuple
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import hashlib
import logging

from vdpchain.exceptions import (
    BlockAssemblyError, ChainError, ConfigError, LedgerError,
)
from vdpchain.lib import ledger as ledger_ops
from vdpchain.lib.blocks import (
    Block, BlockHeader, SlashTx, Stake, Transfer, Unstake, GENESIS_PARENT,
    EMPTY_MERKLE_ROOT, merkle_root,
)
from vdpchain.lib.config import dump_json, format_fraction, get_setting, parse_fraction
from vdpchain.lib.identity import HeaderSignature, KeyPair, VrfResult
from vdpchain.lib.ledger import SlashReceipt, StakeLedger
from vdpchain.lib.slashing import validate_evidence
from vdpchain.lib.suites import RealSuite, SolutionFields
from vdpchain.lib.utils import Verdict, ACCEPT, reject
from vdpchain.lib.vdp import PuzzleInstance, PuzzleParams, PuzzleSolution, default_puzzle_params

logger = logging.getLogger('vdpchain')

EXTENDED_TIP = 'extended_tip'
NEW_TIP_SWITCH = 'new_tip_switch'
SIDE_BRANCH = 'side_branch'
DUPLICATE = 'duplicate'

def lock_blocks_for(days, blocks_per_day):
    # type: (int, int) -> int
    return int(days) * int(blocks_per_day)

class ChainConfig(namedtuple('ChainConfig', ['kappa_con', 'stake_amount', 'lock_blocks',
                                             'block_reward', 'epsilon', 'puzzle',
                                             'slash_orphans'])):
    __slots__ = ()

    @property
    def submitter_reward(self):
        # type: () -> int
        return int(self.epsilon * self.block_reward)

    @property
    def slash_amount(self):
        # type: () -> int
        """(1+eps)*R, burned per multi-fork evidence."""
        return self.block_reward + self.submitter_reward

    def validate(self):
        # type: () -> ChainConfig
        for name in ('kappa_con', 'stake_amount', 'lock_blocks', 'block_reward'):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError('%s must be a non-negative integer' % (name,))
        if self.stake_amount < 1 or self.lock_blocks < 1:
            raise ConfigError('stake_amount and lock_blocks must be positive')
        if not isinstance(self.epsilon, Fraction) or not (0 <= self.epsilon < 1):
            raise ConfigError('epsilon must be a rational in [0, 1)')
        if (self.epsilon * self.block_reward).denominator != 1:
            raise ConfigError('epsilon * block_reward must be a whole number of tokens')
        return self

    def to_dict(self):
        # type: () -> Dict[str, Any]
        d = {
            'kappa_con': self.kappa_con,
            'stake_amount': self.stake_amount,
            'lock_blocks': self.lock_blocks,
            'block_reward': self.block_reward,
            'epsilon': format_fraction(self.epsilon),
            'slash_orphans': self.slash_orphans,
        }  # type: Dict[str, Any]
        if self.puzzle is not None:
            d['puzzle'] = self.puzzle.to_dict()
        return d

    @staticmethod
    def from_dict(d, puzzle=None):
        # type: (Dict[str, Any], Optional[PuzzleParams]) -> ChainConfig
        if puzzle is None and 'puzzle' in d:
            puzzle = PuzzleParams.from_dict(d['puzzle'])
        lock = d.get('lock_blocks')
        if lock is None:
            lock = lock_blocks_for(d.get('lock_days', get_setting('CHAIN_LOCK_DAYS')),
                                   d.get('blocks_per_day', get_setting('CHAIN_BLOCKS_PER_DAY')))
        return ChainConfig(
            kappa_con=d.get('kappa_con', get_setting('CHAIN_KAPPA_CON')),
            stake_amount=d.get('stake_amount', get_setting('CHAIN_STAKE_AMOUNT')),
            lock_blocks=lock,
            block_reward=d.get('block_reward', get_setting('CHAIN_BLOCK_REWARD')),
            epsilon=parse_fraction(d.get('epsilon', get_setting('CHAIN_EPSILON')), 'epsilon'),
            puzzle=puzzle,
            slash_orphans=bool(d.get('slash_orphans', False))).validate()

    def digest(self):
        # type: () -> bytes
        return hashlib.sha256(dump_json(self.to_dict()).encode('utf-8')).digest()

def default_chain_config(puzzle=None, **changes):
    # type: (Optional[PuzzleParams], **Any) -> ChainConfig
    config = ChainConfig.from_dict({}, puzzle=puzzle or default_puzzle_params())
    return config._replace(**changes).validate()

_default_suites = {}  # type: Dict[Any, RealSuite]

def default_suite(puzzle=None):
    # type: (Optional[PuzzleParams]) -> RealSuite
    puzzle = puzzle or default_puzzle_params()
    if puzzle not in _default_suites:
        _default_suites[puzzle] = RealSuite(puzzle)
    return _default_suites[puzzle]

def _suite_for(config, suite):
    # type: (ChainConfig, Any) -> Any
    return suite if suite is not None else default_suite(config.puzzle)

def make_genesis(config, allocations, suite=None):
    # type: (ChainConfig, Iterable[Tuple[bytes, int, bool]], Any) -> Tuple[Block, StakeLedger]
    """The genesis block seeds the first VRF with a group element derived
    from the config digest.  It has no proposer, VRF or signature."""
    suite = _suite_for(config, suite)
    header = BlockHeader(height=0, parent_hash=GENESIS_PARENT, proposer_pk=b'', vrf_r=b'',
                         vrf_proof=b'', puzzle_t=0, puzzle_d=suite.genesis_d(config.digest()),
                         puzzle_proof=b'', tx_merkle_root=EMPTY_MERKLE_ROOT,
                         signature=HeaderSignature(b''))
    ledger = ledger_ops.genesis_ledger(allocations, config.stake_amount, config.lock_blocks)
    return Block(header), ledger

def derive_instance(sk, parent, suite):
    # type: (bytes, Block, Any) -> Tuple[PuzzleInstance, VrfResult]
    """The seed is the parent's puzzle output alone, so nothing the
    proposer controls (transactions, timestamps) changes its instance."""
    vrf = suite.vrf_eval(sk, parent.header.puzzle_d)
    return suite.instance_for(vrf.output_r), vrf

def assemble_block(keypair, parent, txs, solution, vrf, suite):
    # type: (KeyPair, Block, Sequence[Any], Any, VrfResult, Any) -> Block
    if isinstance(solution, PuzzleSolution):
        solution = suite.encode_solution(solution)
    if not suite.vrf_verify(keypair.public_key, parent.header.puzzle_d, vrf):
        raise BlockAssemblyError('the VRF output was not produced by this key for this parent',
                                 code='vrf_key_mismatch')
    verdict = suite.verify_solution(vrf.output_r, solution)
    if not verdict:
        raise BlockAssemblyError('solution does not solve the derived instance: %s'
                                 % (verdict.reason,), code='solution_mismatch')
    header = BlockHeader(height=parent.height + 1, parent_hash=parent.digest,
                         proposer_pk=keypair.public_key, vrf_r=vrf.output_r, vrf_proof=vrf.proof,
                         puzzle_t=solution.t, puzzle_d=solution.d, puzzle_proof=solution.proof,
                         tx_merkle_root=merkle_root(txs), signature=HeaderSignature(b''))
    header = header._replace(signature=suite.sign(keypair.secret_key, header.signed_bytes()))
    return Block(header, txs)

def check_header(block, tree, ledger, config, suite=None):
    # type: (Block, BlockTree, StakeLedger, ChainConfig, Any) -> Verdict
    """Checks 1 through 5, against the parent's ledger state."""
    suite = _suite_for(config, suite)
    h = block.header
    parent = tree.get(h.parent_hash)
    if parent is None:
        return reject('unknown_parent')
    if h.height != parent.height + 1:
        return reject('bad_height')
    if not ledger.is_active(h.proposer_pk):
        return reject('proposer_not_validator')
    if not suite.vrf_verify(h.proposer_pk, parent.header.puzzle_d, VrfResult(h.vrf_r, h.vrf_proof)):
        return reject('vrf_invalid')
    if not suite.verify_solution(h.vrf_r, SolutionFields(h.puzzle_t, h.puzzle_d, h.puzzle_proof)):
        return reject('puzzle_invalid')
    if not suite.verify_sig(h.proposer_pk, h.signed_bytes(), h.signature):
        return reject('signature_invalid')
    if merkle_root(block.transactions) != h.tx_merkle_root:
        return reject('merkle_mismatch')
    return ACCEPT

def apply_transactions(ledger, block, tree, config, suite=None):
    # type: (StakeLedger, Block, BlockTree, ChainConfig, Any) -> Tuple[StakeLedger, List[SlashReceipt]]
    suite = _suite_for(config, suite)
    height = block.height
    receipts = []  # type: List[SlashReceipt]
    for tx in block.transactions:
        if isinstance(tx, Transfer):
            ledger = ledger_ops.transfer(ledger, tx.sender, tx.recipient, tx.amount)
        elif isinstance(tx, Stake):
            ledger = ledger_ops.stake(ledger, tx.pk, height)
        elif isinstance(tx, Unstake):
            ledger = ledger_ops.unstake(ledger, tx.pk, height)
        elif isinstance(tx, SlashTx):
            target = validate_evidence(tx.evidence, tree, block.parent_hash, config, suite)
            ledger, receipt = ledger_ops.apply_slashing(ledger, tx.evidence, config,
                                                        target=target, height=height)
            receipts.append(receipt)
        else:
            raise ChainError('unknown transaction type %s' % (type(tx).__name__,))
    return ledger, receipts

def apply_block(ledger, block, tree, config, suite=None):
    # type: (StakeLedger, Block, BlockTree, ChainConfig, Any) -> Tuple[StakeLedger, List[SlashReceipt]]
    """The post-state of `block` given its parent's post-state.  The
    block's own branch decides which ancestor gets rewarded, so the
    result is the same in every view that holds the block."""
    ledger, receipts = apply_transactions(ledger, block, tree, config, suite)
    confirmed_height = block.height - config.kappa_con
    for height in range(ledger.rewarded_height + 1, confirmed_height + 1):
        if height == block.height:
            rewarded = block
        else:
            rewarded = tree.get(tree.ancestor_at_height(block.parent_hash, height))
        ledger = ledger_ops.credit_block_reward(ledger, height, rewarded.proposer_pk,
                                                config.block_reward)
    return ledger.checked(), receipts

def validate_block(block, tree, ledger, config, suite=None):
    # type: (Block, BlockTree, StakeLedger, ChainConfig, Any) -> Verdict
    verdict = check_header(block, tree, ledger, config, suite)
    if not verdict:
        return verdict
    try:
        apply_transactions(ledger, block, tree, config, suite)
    except (LedgerError, ChainError) as e:
        logger.debug('block %s has invalid transactions: %s', block.digest.hex()[:12], e.error)
        return reject('invalid_transactions')
    return ACCEPT

class BlockTree(object):
    """
    One view of the block tree.  Fork choice keeps the highest block,
    and between equal heights the one that arrived first.

    Ancestry queries use binary-lifting skip pointers; `_skips[x][k]` is
    the ancestor 2**k levels above x.  Blocks are also indexed by
    proposer for equivocation detection.
    """

    def __init__(self, genesis):
        # type: (Block) -> None
        self.genesis = genesis
        self.blocks = {genesis.digest: genesis}  # type: Dict[bytes, Block]
        self.children = {genesis.digest: []}  # type: Dict[bytes, List[bytes]]
        self.arrival = {genesis.digest: 0}  # type: Dict[bytes, int]
        self.tip = genesis.digest
        self._skips = {genesis.digest: []}  # type: Dict[bytes, List[bytes]]
        # pk -> that proposer's blocks with no later block of theirs above them
        self._proposer_heads = {}  # type: Dict[bytes, List[bytes]]
        # digest -> nearest ancestor by the same proposer
        self._proposer_prev = {}  # type: Dict[bytes, Optional[bytes]]
        self._by_proposer = {}  # type: Dict[bytes, List[bytes]]
        self._conflicts = {}  # type: Dict[bytes, Tuple[bytes, ...]]
        # prior blocks already covered by emitted multi-fork evidence
        self.reported = set()  # type: set

    def __contains__(self, digest):
        # type: (bytes) -> bool
        return digest in self.blocks

    def __len__(self):
        # type: () -> int
        return len(self.blocks)

    def get(self, digest):
        # type: (bytes) -> Optional[Block]
        return self.blocks.get(digest)

    @property
    def tip_block(self):
        # type: () -> Block
        return self.blocks[self.tip]

    @property
    def height(self):
        # type: () -> int
        return self.blocks[self.tip].height

    def insert_block(self, block):
        # type: (Block) -> str
        digest = block.digest
        if digest in self.blocks:
            return DUPLICATE
        parent = self.blocks.get(block.parent_hash)
        if parent is None:
            raise ChainError('parent %s of block %s is not in the tree'
                             % (block.parent_hash.hex()[:12], digest.hex()[:12]))
        if block.height != parent.height + 1:
            raise ChainError('block %s is not one above its parent' % (digest.hex()[:12],))

        self.blocks[digest] = block
        self.children[digest] = []
        self.children[parent.digest].append(digest)
        self.arrival[digest] = len(self.arrival)

        skips = [parent.digest]
        k = 0
        while k < len(self._skips[skips[k]]):
            skips.append(self._skips[skips[k]][k])
            k += 1
        self._skips[digest] = skips

        self._index_proposer(block)

        tip = self.blocks[self.tip]
        if block.height > tip.height:
            outcome = EXTENDED_TIP if block.parent_hash == self.tip else NEW_TIP_SWITCH
            self.tip = digest
        else:
            outcome = SIDE_BRANCH
        return outcome

    def _index_proposer(self, block):
        # type: (Block) -> None
        pk = block.proposer_pk
        digest = block.digest
        conflicts = []  # type: List[bytes]
        prev = None  # type: Optional[bytes]
        remaining_heads = []  # type: List[bytes]
        seen = set()  # type: set
        for head in self._proposer_heads.get(pk, []):
            cur = head  # type: Optional[bytes]
            is_head_below = self.is_ancestor(head, digest)
            if not is_head_below:
                remaining_heads.append(head)
            while cur is not None and not self.is_ancestor(cur, digest):
                if cur not in seen:
                    seen.add(cur)
                    conflicts.append(cur)
                cur = self._proposer_prev[cur]
            if cur is not None and (prev is None or
                                    self.blocks[cur].height > self.blocks[prev].height):
                prev = cur
        self._proposer_prev[digest] = prev
        self._proposer_heads[pk] = remaining_heads + [digest]
        self._by_proposer.setdefault(pk, []).append(digest)
        if conflicts:
            self._conflicts[digest] = tuple(conflicts)

    def conflicts_of(self, digest):
        # type: (bytes) -> Tuple[bytes, ...]
        """Blocks by the same proposer that are neither ancestors nor
        descendants of `digest`, as known when it was inserted."""
        return self._conflicts.get(digest, ())

    def blocks_by(self, pk):
        # type: (bytes) -> List[Block]
        return [self.blocks[d] for d in self._by_proposer.get(pk, [])]

    def ancestor_at_height(self, digest, height):
        # type: (bytes, int) -> bytes
        block = self.blocks[digest]
        if height < 0 or height > block.height:
            raise ChainError('no ancestor at height %d of a block at height %d'
                             % (height, block.height))
        cur = digest
        gap = block.height - height
        k = 0
        while gap:
            if gap & 1:
                cur = self._skips[cur][k]
            gap >>= 1
            k += 1
        return cur

    def is_ancestor(self, ancestor, digest):
        # type: (bytes, bytes) -> bool
        """True also when the two are the same block."""
        a = self.blocks.get(ancestor)
        if a is None or digest not in self.blocks:
            return False
        if a.height > self.blocks[digest].height:
            return False
        return self.ancestor_at_height(digest, a.height) == ancestor

    def common_ancestor(self, a, b):
        # type: (bytes, bytes) -> bytes
        height = min(self.blocks[a].height, self.blocks[b].height)
        a = self.ancestor_at_height(a, height)
        b = self.ancestor_at_height(b, height)
        if a == b:
            return a
        for k in range(len(self._skips[a]) - 1, -1, -1):
            if k < len(self._skips[a]) and self._skips[a][k] != self._skips[b][k]:
                a = self._skips[a][k]
                b = self._skips[b][k]
        return self._skips[a][0]

    def chain_to(self, digest):
        # type: (bytes) -> List[Block]
        chain = []  # type: List[Block]
        cur = digest  # type: Optional[bytes]
        while cur is not None:
            block = self.blocks[cur]
            chain.append(block)
            cur = block.parent_hash if block.height > 0 else None
        chain.reverse()
        return chain

    def longest_chain(self):
        # type: () -> List[Block]
        return self.chain_to(self.tip)

    def confirmed_tip(self, kappa_con):
        # type: (int) -> Optional[bytes]
        height = self.height - kappa_con
        if height < 0:
            return None
        return self.ancestor_at_height(self.tip, height)

    def confirmed_prefix(self, kappa_con):
        # type: (int) -> List[Block]
        chain = self.longest_chain()
        return chain[:max(0, len(chain) - kappa_con)]

    def in_arrival_order(self):
        # type: () -> List[Block]
        return sorted(self.blocks.values(), key=lambda b: self.arrival[b.digest])

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'genesis': self.genesis.to_dict(),
                'blocks': [b.to_dict() for b in self.in_arrival_order()[1:]],
                'tip': self.tip.hex()}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> BlockTree
        tree = BlockTree(Block.from_dict(d['genesis']))
        for block in d['blocks']:
            tree.insert_block(Block.from_dict(block))
        return tree

def insert_block(tree, block):
    # type: (BlockTree, Block) -> str
    return tree.insert_block(block)

def longest_chain(tree):
    # type: (BlockTree) -> List[Block]
    return tree.longest_chain()

def confirmed_prefix(tree, config):
    # type: (BlockTree, ChainConfig) -> List[Block]
    return tree.confirmed_prefix(config.kappa_con)

class BlockStore(object):
    """
    Verdicts and ledger post-states keyed by block digest.  Validity
    depends only on a block and its ancestors, so every view holding a
    block can share one store.  `tree` must hold every block the store
    is asked about, and every block any evidence refers to.
    """

    def __init__(self, config, suite, tree, genesis_ledger):
        # type: (ChainConfig, Any, BlockTree, StakeLedger) -> None
        self.config = config
        self.suite = suite
        self.tree = tree
        self.verdicts = {tree.genesis.digest: ACCEPT}  # type: Dict[bytes, Verdict]
        self.states = {tree.genesis.digest: genesis_ledger}  # type: Dict[bytes, StakeLedger]
        self.receipts = {}  # type: Dict[bytes, List[SlashReceipt]]
        self.states_checked = 1

    def admit(self, block):
        # type: (Block) -> Verdict
        cached = self.verdicts.get(block.digest)
        if cached is not None:
            return cached
        parent_state = self.states.get(block.parent_hash)
        if parent_state is None:
            verdict = reject('unknown_parent')
        else:
            verdict = check_header(block, self.tree, parent_state, self.config, self.suite)
            if verdict:
                try:
                    state, receipts = apply_block(parent_state, block, self.tree,
                                                  self.config, self.suite)
                except (LedgerError, ChainError) as e:
                    logger.debug('block %s rejected: %s', block.digest.hex()[:12], e.error)
                    verdict = reject('invalid_transactions')
                else:
                    self.states[block.digest] = state
                    self.receipts[block.digest] = receipts
                    self.states_checked += 1
        self.verdicts[block.digest] = verdict
        return verdict

    def state(self, digest):
        # type: (bytes) -> StakeLedger
        return self.states[digest]

def ledger_to_dict(ledger):
    # type: (StakeLedger) -> Dict[str, Any]
    return ledger.to_dict()

def ledger_from_dict(d):
    # type: (Dict[str, Any]) -> StakeLedger
    return StakeLedger.from_dict(d)
