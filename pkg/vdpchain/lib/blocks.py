"""
Block, header, transaction and evidence types with their canonical
encodings.

The signed bytes of a header are its fields in declaration order, each
length-prefixed with a 4-byte big-endian length; the signature itself is
not part of them.  The header digest is the sha256 of the signed bytes.
"""
from __future__ import absolute_import

from collections import namedtuple
from typing import Any, Dict, Iterable, List, Sequence

import hashlib

from vdpchain.exceptions import InvalidTransaction
from vdpchain.lib.identity import HeaderSignature
from vdpchain.lib.ledger import MULTI_FORK, SAME_PARENT
from vdpchain.lib.utils import int_to_bytes, length_prefixed

EVIDENCE_KINDS = (SAME_PARENT, MULTI_FORK)
GENESIS_PARENT = b'\x00' * 32
EMPTY_MERKLE_ROOT = hashlib.sha256(b'').digest()

HEADER_FIELDS = ['height', 'parent_hash', 'proposer_pk', 'vrf_r', 'vrf_proof', 'puzzle_t',
                 'puzzle_d', 'puzzle_proof', 'tx_merkle_root', 'signature']
_BYTES_FIELDS = ['parent_hash', 'proposer_pk', 'vrf_r', 'vrf_proof', 'puzzle_d',
                 'puzzle_proof', 'tx_merkle_root']

class BlockHeader(namedtuple('BlockHeader', HEADER_FIELDS)):
    __slots__ = ()

    def signed_bytes(self):
        # type: () -> bytes
        return length_prefixed([
            int_to_bytes(self.height, 8),
            self.parent_hash,
            self.proposer_pk,
            self.vrf_r,
            self.vrf_proof,
            int_to_bytes(self.puzzle_t, 8),
            self.puzzle_d,
            self.puzzle_proof,
            self.tx_merkle_root,
        ])

    def digest(self):
        # type: () -> bytes
        return hashlib.sha256(self.signed_bytes()).digest()

    def encode(self):
        # type: () -> bytes
        return length_prefixed([self.signed_bytes(), self.signature.signature])

    def to_dict(self):
        # type: () -> Dict[str, Any]
        d = dict((name, getattr(self, name).hex()) for name in _BYTES_FIELDS)
        d['height'] = self.height
        d['puzzle_t'] = self.puzzle_t
        d['signature'] = self.signature.signature.hex()
        return d

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> BlockHeader
        fields = dict((name, bytes.fromhex(d[name])) for name in _BYTES_FIELDS)
        return BlockHeader(height=int(d['height']), puzzle_t=int(d['puzzle_t']),
                           signature=HeaderSignature(bytes.fromhex(d['signature'])),
                           **fields)

class SlashingEvidence(namedtuple('SlashingEvidence', ['kind', 'offender_pk', 'block_refs',
                                                       'submitter_pk'])):
    """Signed headers of one offender that conflict.  Either header may be
    the one penalized; which one depends on the branch that includes the
    evidence."""
    __slots__ = ()

    def ref_digests(self):
        # type: () -> List[bytes]
        return [h.digest() for h in self.block_refs]

    def encode(self):
        # type: () -> bytes
        return length_prefixed([self.kind.encode('ascii'), self.offender_pk, self.submitter_pk] +
                               [h.encode() for h in self.block_refs])

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'kind': self.kind, 'offender_pk': self.offender_pk.hex(),
                'submitter_pk': self.submitter_pk.hex(),
                'block_refs': [h.to_dict() for h in self.block_refs]}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> SlashingEvidence
        return SlashingEvidence(d['kind'], bytes.fromhex(d['offender_pk']),
                                tuple(BlockHeader.from_dict(h) for h in d['block_refs']),
                                bytes.fromhex(d['submitter_pk']))

Transfer = namedtuple('Transfer', ['sender', 'recipient', 'amount'])
Stake = namedtuple('Stake', ['pk'])
Unstake = namedtuple('Unstake', ['pk'])
SlashTx = namedtuple('SlashTx', ['evidence'])

def encode_tx(tx):
    # type: (Any) -> bytes
    if isinstance(tx, Transfer):
        return length_prefixed([b'transfer', tx.sender, tx.recipient, int_to_bytes(tx.amount, 8)])
    if isinstance(tx, Stake):
        return length_prefixed([b'stake', tx.pk])
    if isinstance(tx, Unstake):
        return length_prefixed([b'unstake', tx.pk])
    if isinstance(tx, SlashTx):
        return length_prefixed([b'slash', tx.evidence.encode()])
    raise InvalidTransaction('unknown transaction type %s' % (type(tx).__name__,))

def tx_to_dict(tx):
    # type: (Any) -> Dict[str, Any]
    if isinstance(tx, Transfer):
        return {'type': 'transfer', 'sender': tx.sender.hex(), 'recipient': tx.recipient.hex(),
                'amount': tx.amount}
    if isinstance(tx, Stake):
        return {'type': 'stake', 'pk': tx.pk.hex()}
    if isinstance(tx, Unstake):
        return {'type': 'unstake', 'pk': tx.pk.hex()}
    if isinstance(tx, SlashTx):
        return {'type': 'slash', 'evidence': tx.evidence.to_dict()}
    raise InvalidTransaction('unknown transaction type %s' % (type(tx).__name__,))

def tx_from_dict(d):
    # type: (Dict[str, Any]) -> Any
    kind = d.get('type')
    if kind == 'transfer':
        return Transfer(bytes.fromhex(d['sender']), bytes.fromhex(d['recipient']), int(d['amount']))
    if kind == 'stake':
        return Stake(bytes.fromhex(d['pk']))
    if kind == 'unstake':
        return Unstake(bytes.fromhex(d['pk']))
    if kind == 'slash':
        return SlashTx(SlashingEvidence.from_dict(d['evidence']))
    raise InvalidTransaction('unknown transaction type %r' % (kind,))

def merkle_root(transactions):
    # type: (Iterable[Any]) -> bytes
    """Binary Merkle tree over the canonical encodings; an odd level
    duplicates its last node.  No transactions gives sha256(b'')."""
    level = [hashlib.sha256(b'\x00' + encode_tx(tx)).digest() for tx in transactions]
    if not level:
        return EMPTY_MERKLE_ROOT
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [hashlib.sha256(b'\x01' + level[i] + level[i + 1]).digest()
                 for i in range(0, len(level), 2)]
    return level[0]

class Block(object):
    __slots__ = ('header', 'transactions', 'digest')

    def __init__(self, header, transactions=()):
        # type: (BlockHeader, Sequence[Any]) -> None
        self.header = header
        self.transactions = tuple(transactions)
        self.digest = header.digest()

    @property
    def height(self):
        # type: () -> int
        return self.header.height

    @property
    def parent_hash(self):
        # type: () -> bytes
        return self.header.parent_hash

    @property
    def proposer_pk(self):
        # type: () -> bytes
        return self.header.proposer_pk

    def __eq__(self, other):
        # type: (Any) -> bool
        return (isinstance(other, Block) and self.digest == other.digest and
                self.header == other.header and self.transactions == other.transactions)

    def __ne__(self, other):
        # type: (Any) -> bool
        return not self == other

    def __hash__(self):
        # type: () -> int
        return hash(self.digest)

    def __repr__(self):
        # type: () -> str
        return '<Block %d %s>' % (self.height, self.digest.hex()[:12])

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'header': self.header.to_dict(),
                'transactions': [tx_to_dict(tx) for tx in self.transactions]}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> Block
        return Block(BlockHeader.from_dict(d['header']),
                     [tx_from_dict(tx) for tx in d['transactions']])
