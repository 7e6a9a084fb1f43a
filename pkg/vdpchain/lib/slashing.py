"""
Equivocation detection and evidence validation.

Evidence names two signed headers by one offender (or, with
`slash_orphans`, a single header).  It carries no verdict on which
header is at fault: the branch that includes the evidence penalizes the
referenced block that is not on that branch.
"""
from __future__ import absolute_import

from typing import Any, List, Optional

import logging

from vdpchain.exceptions import InvalidTransaction
from vdpchain.lib.blocks import EVIDENCE_KINDS, SlashingEvidence
from vdpchain.lib.ledger import MULTI_FORK, SAME_PARENT

logger = logging.getLogger('vdpchain')

def detect_equivocation(tree, new_block, submitter_pk=b''):
    # type: (Any, Any, bytes) -> List[SlashingEvidence]
    """
    Evidence against the proposer of `new_block`, which must already be
    in `tree`.  Each earlier sibling by the same key gives same_parent
    evidence.  Each earlier block on a conflicting branch gives one
    multi_fork evidence, the first time that block is involved; if all
    of them were reported before, one evidence still covers the new block.
    """
    pk = new_block.proposer_pk
    conflicts = [tree.get(d) for d in tree.conflicts_of(new_block.digest)]
    evidence = []  # type: List[SlashingEvidence]
    others = []
    for block in conflicts:
        if block.parent_hash == new_block.parent_hash:
            evidence.append(SlashingEvidence(SAME_PARENT, pk, (block.header, new_block.header),
                                             submitter_pk))
        else:
            others.append(block)
    fresh = [b for b in others if b.digest not in tree.reported]
    if others and not fresh:
        fresh = others[:1]
    for block in fresh:
        evidence.append(SlashingEvidence(MULTI_FORK, pk, (block.header, new_block.header),
                                         submitter_pk))
    if others:
        tree.reported.update(b.digest for b in others)
        tree.reported.add(new_block.digest)
    if evidence:
        logger.debug('%d equivocation evidences against %s', len(evidence), pk.hex()[:16])
    return evidence

def orphan_evidence(tree, branch_tip, offender_pk, submitter_pk=b''):
    # type: (Any, bytes, bytes, bytes) -> List[SlashingEvidence]
    """Single-header evidence for every block of `offender_pk` that is
    off the branch ending at `branch_tip`."""
    return [SlashingEvidence(MULTI_FORK, offender_pk, (block.header,), submitter_pk)
            for block in tree.blocks_by(offender_pk)
            if not tree.is_ancestor(block.digest, branch_tip)]

def evidence_target(evidence, tree, including_parent):
    # type: (SlashingEvidence, Any, bytes) -> Optional[bytes]
    """The referenced block the including branch penalizes: the first one
    that is not an ancestor of `including_parent`."""
    for digest in evidence.ref_digests():
        if not tree.is_ancestor(digest, including_parent):
            return digest
    return None

def validate_evidence(evidence, tree, including_parent, config, suite):
    # type: (SlashingEvidence, Any, bytes, Any, Any) -> bytes
    """Returns the digest of the block to penalize, or raises
    InvalidTransaction."""
    if evidence.kind not in EVIDENCE_KINDS:
        raise InvalidTransaction('unknown evidence kind %r' % (evidence.kind,))
    refs = evidence.block_refs
    allowed = (1, 2) if (evidence.kind == MULTI_FORK and config.slash_orphans) else (2,)
    if len(refs) not in allowed:
        raise InvalidTransaction('%s evidence needs %s headers'
                                 % (evidence.kind, ' or '.join(str(n) for n in allowed)))
    for header in refs:
        if header.proposer_pk != evidence.offender_pk:
            raise InvalidTransaction('evidence header not proposed by the offender')
        if not suite.verify_sig(evidence.offender_pk, header.signed_bytes(), header.signature):
            raise InvalidTransaction('evidence header signature does not verify')
    digests = evidence.ref_digests()
    if len(set(digests)) != len(digests):
        raise InvalidTransaction('evidence references the same block twice')
    for digest in digests:
        if digest not in tree:
            raise InvalidTransaction('evidence references an unknown block')

    if len(refs) == 2:
        a, b = digests
        if evidence.kind == SAME_PARENT:
            if refs[0].parent_hash != refs[1].parent_hash:
                raise InvalidTransaction('same_parent evidence with different parents')
        elif tree.is_ancestor(a, b) or tree.is_ancestor(b, a):
            raise InvalidTransaction('multi_fork evidence on a single branch')

    target = evidence_target(evidence, tree, including_parent)
    if target is None:
        raise InvalidTransaction('no referenced block is off the including branch')
    return target
