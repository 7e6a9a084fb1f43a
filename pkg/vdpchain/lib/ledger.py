"""
The fixed-stake ledger.

A `StakeLedger` is an immutable snapshot: every operation returns a new
ledger and leaves its input untouched, so the post-state of each block
can be cached and shared by every view that holds the block.  Each
operation re-checks the invariants before returning:

* an account's deposit is either 0 or what remains of a single stake;
  a validator is active only while its deposit is exactly S,
* balances and deposits never go negative,
* total supply == initial + minted rewards + minted submitter rewards - burned.
"""
from __future__ import absolute_import

from collections import namedtuple
from typing import Any, Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import logging

from vdpchain.exceptions import (
    AlreadyStaked, DuplicateEvidence, InsufficientBalance, InvalidTransaction,
    LedgerInvariantError, NotValidator, StaleEvidence, StakeLocked,
)

logger = logging.getLogger('vdpchain')

SAME_PARENT = 'same_parent_double_propose'
MULTI_FORK = 'multi_fork_block'

Account = namedtuple('Account', ['balance', 'staked', 'staked_at_height', 'slashed_total'])
EMPTY_ACCOUNT = Account(0, 0, None, 0)

SlashReceipt = namedtuple('SlashReceipt', ['kind', 'offender_pk', 'submitter_pk', 'target',
                                           'burned', 'submitter_reward', 'height'])

class StakeLedger(object):
    __slots__ = ('accounts', 'stake_amount', 'lock_blocks', 'initial_supply',
                 'minted_rewards', 'minted_submitter', 'burned', 'slashed_refs',
                 'rewarded_height')

    def __init__(self, accounts, stake_amount, lock_blocks, initial_supply=None,
                 minted_rewards=0, minted_submitter=0, burned=0, slashed_refs=None,
                 rewarded_height=0):
        # type: (Dict[bytes, Account], int, int, Optional[int], int, int, int, Optional[Dict[Tuple[bytes, bytes], int]], int) -> None
        self.accounts = accounts
        self.stake_amount = stake_amount
        self.lock_blocks = lock_blocks
        if initial_supply is None:
            initial_supply = sum(a.balance + a.staked for a in accounts.values())
        self.initial_supply = initial_supply
        self.minted_rewards = minted_rewards
        self.minted_submitter = minted_submitter
        self.burned = burned
        # (offender, slashed block digest) -> height of the block that applied it
        self.slashed_refs = slashed_refs if slashed_refs is not None else {}
        self.rewarded_height = rewarded_height

    def _replace(self, **changes):
        # type: (**Any) -> StakeLedger
        fields = dict((name, getattr(self, name)) for name in self.__slots__)
        fields.update(changes)
        return StakeLedger(**fields)

    def account(self, pk):
        # type: (bytes) -> Account
        return self.accounts.get(pk, EMPTY_ACCOUNT)

    def with_accounts(self, updates, **changes):
        # type: (Dict[bytes, Account], **Any) -> StakeLedger
        accounts = dict(self.accounts)
        accounts.update(updates)
        return self._replace(accounts=accounts, **changes).checked()

    def is_active(self, pk):
        # type: (bytes) -> bool
        return self.account(pk).staked == self.stake_amount

    @property
    def validator_set(self):
        # type: () -> FrozenSet[bytes]
        return frozenset(pk for pk, a in self.accounts.items() if a.staked == self.stake_amount)

    def total_supply(self):
        # type: () -> int
        return sum(a.balance + a.staked for a in self.accounts.values())

    def expected_supply(self):
        # type: () -> int
        return self.initial_supply + self.minted_rewards + self.minted_submitter - self.burned

    def holdings(self, pk):
        # type: (bytes) -> int
        a = self.account(pk)
        return a.balance + a.staked

    def checked(self):
        # type: () -> StakeLedger
        for pk, a in self.accounts.items():
            if a.balance < 0 or a.staked < 0:
                raise LedgerInvariantError('negative holdings for %s' % (pk.hex()[:16],))
            if a.staked > self.stake_amount:
                raise LedgerInvariantError('deposit above the fixed stake for %s' % (pk.hex()[:16],))
        total = self.total_supply()
        if total != self.expected_supply():
            raise LedgerInvariantError('conservation violated: supply %d, expected %d'
                                       % (total, self.expected_supply()))
        return self

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {
            'accounts': dict((pk.hex(), {'balance': a.balance, 'staked': a.staked,
                                         'staked_at_height': a.staked_at_height,
                                         'slashed_total': a.slashed_total})
                             for pk, a in self.accounts.items()),
            'stake_amount': self.stake_amount,
            'lock_blocks': self.lock_blocks,
            'initial_supply': self.initial_supply,
            'minted_rewards': self.minted_rewards,
            'minted_submitter': self.minted_submitter,
            'burned': self.burned,
            'slashed_refs': sorted([offender.hex(), target.hex(), height]
                                   for (offender, target), height in self.slashed_refs.items()),
            'rewarded_height': self.rewarded_height,
        }

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> StakeLedger
        accounts = dict((bytes.fromhex(pk), Account(a['balance'], a['staked'],
                                                    a['staked_at_height'], a['slashed_total']))
                        for pk, a in d['accounts'].items())
        refs = dict(((bytes.fromhex(o), bytes.fromhex(t)), h) for o, t, h in d['slashed_refs'])
        return StakeLedger(accounts, d['stake_amount'], d['lock_blocks'],
                           initial_supply=d['initial_supply'],
                           minted_rewards=d['minted_rewards'],
                           minted_submitter=d['minted_submitter'],
                           burned=d['burned'], slashed_refs=refs,
                           rewarded_height=d['rewarded_height']).checked()

def genesis_ledger(allocations, stake_amount, lock_blocks):
    # type: (Iterable[Tuple[bytes, int, bool]], int, int) -> StakeLedger
    """`allocations` are (pk, liquid balance, staked at genesis)."""
    accounts = {}  # type: Dict[bytes, Account]
    for pk, balance, staked in allocations:
        if pk in accounts:
            raise InvalidTransaction('duplicate genesis allocation')
        accounts[pk] = Account(balance, stake_amount if staked else 0,
                               0 if staked else None, 0)
    return StakeLedger(accounts, stake_amount, lock_blocks).checked()

def stake(ledger, pk, height):
    # type: (StakeLedger, bytes, int) -> StakeLedger
    a = ledger.account(pk)
    if a.staked > 0:
        raise AlreadyStaked('%s already holds a deposit' % (pk.hex()[:16],))
    if a.balance < ledger.stake_amount:
        raise InsufficientBalance('staking needs %d tokens, balance is %d'
                                  % (ledger.stake_amount, a.balance))
    return ledger.with_accounts({pk: a._replace(balance=a.balance - ledger.stake_amount,
                                                staked=ledger.stake_amount,
                                                staked_at_height=height)})

def unstake(ledger, pk, height):
    # type: (StakeLedger, bytes, int) -> StakeLedger
    a = ledger.account(pk)
    if a.staked == 0:
        raise NotValidator('%s holds no deposit' % (pk.hex()[:16],))
    if height - a.staked_at_height < ledger.lock_blocks:
        raise StakeLocked('deposit locked until height %d'
                          % (a.staked_at_height + ledger.lock_blocks,))
    return ledger.with_accounts({pk: a._replace(balance=a.balance + a.staked, staked=0,
                                                staked_at_height=None)})

def transfer(ledger, sender, recipient, amount):
    # type: (StakeLedger, bytes, bytes, int) -> StakeLedger
    if amount <= 0:
        raise InvalidTransaction('transfer amount must be positive')
    a = ledger.account(sender)
    if a.balance < amount:
        raise InsufficientBalance('transfer of %d exceeds balance %d' % (amount, a.balance))
    if sender == recipient:
        return ledger
    b = ledger.account(recipient)
    return ledger.with_accounts({sender: a._replace(balance=a.balance - amount),
                                 recipient: b._replace(balance=b.balance + amount)})

def credit_block_reward(ledger, height, proposer_pk, reward):
    # type: (StakeLedger, int, bytes, int) -> StakeLedger
    """Mints the reward for the confirmed block at `height`, once."""
    if height <= ledger.rewarded_height:
        return ledger
    if height != ledger.rewarded_height + 1:
        raise LedgerInvariantError('reward for height %d skips height %d'
                                   % (height, ledger.rewarded_height + 1))
    a = ledger.account(proposer_pk)
    return ledger.with_accounts({proposer_pk: a._replace(balance=a.balance + reward)},
                                minted_rewards=ledger.minted_rewards + reward,
                                rewarded_height=height)

def credit_rewards(ledger, confirmed_chain, config):
    # type: (StakeLedger, Sequence[Any], Any) -> StakeLedger
    """R to the proposer of every block of `confirmed_chain` (a prefix
    starting at genesis) not yet rewarded.  Genesis has no proposer."""
    for block in confirmed_chain:
        height = block.header.height
        if height == 0 or height <= ledger.rewarded_height:
            continue
        ledger = credit_block_reward(ledger, height, block.header.proposer_pk, config.block_reward)
    return ledger

def slash_key(offender_pk, target):
    # type: (bytes, bytes) -> Tuple[bytes, bytes]
    return (offender_pk, target)

def check_slashable(ledger, offender_pk, target):
    # type: (StakeLedger, bytes, bytes) -> None
    if slash_key(offender_pk, target) in ledger.slashed_refs:
        raise DuplicateEvidence('already slashed for this block')
    if ledger.account(offender_pk).staked == 0:
        raise StaleEvidence('offender holds no deposit')

def apply_slashing(ledger, evidence, config, target=None, height=0):
    # type: (StakeLedger, Any, Any, Optional[bytes], int) -> Tuple[StakeLedger, SlashReceipt]
    """
    same_parent evidence burns the offender's whole deposit; multi_fork
    evidence burns (1+eps)*R, from the deposit first and then the balance.
    Either way eps*R is minted to the submitter.  Only the first evidence
    for an (offender, block) pair counts.

    `target` is the digest of the penalized block; by default the first
    header the evidence references.
    """
    offender = evidence.offender_pk
    if target is None:
        target = evidence.block_refs[0].digest()
    check_slashable(ledger, offender, target)

    a = ledger.account(offender)
    if evidence.kind == SAME_PARENT:
        from_deposit, from_balance = a.staked, 0
    elif evidence.kind == MULTI_FORK:
        penalty = config.slash_amount
        from_deposit = min(penalty, a.staked)
        from_balance = min(penalty - from_deposit, a.balance)
    else:
        raise InvalidTransaction('unknown evidence kind %r' % (evidence.kind,))

    burned = from_deposit + from_balance
    reward = config.submitter_reward
    updates = {offender: a._replace(balance=a.balance - from_balance,
                                    staked=a.staked - from_deposit,
                                    slashed_total=a.slashed_total + burned)}
    submitter = evidence.submitter_pk
    if reward:
        s = updates.get(submitter, ledger.account(submitter))
        updates[submitter] = s._replace(balance=s.balance + reward)

    refs = dict(ledger.slashed_refs)
    refs[slash_key(offender, target)] = height
    new_ledger = ledger.with_accounts(updates, burned=ledger.burned + burned,
                                      minted_submitter=ledger.minted_submitter + reward,
                                      slashed_refs=refs)
    receipt = SlashReceipt(evidence.kind, offender, submitter, target, burned, reward, height)
    logger.debug('slashed %s: burned %d, submitter reward %d',
                 offender.hex()[:16], burned, reward)
    return new_ledger, receipt
