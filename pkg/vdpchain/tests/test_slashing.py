from __future__ import absolute_import

from typing import Any, Optional

from vdpchain.exceptions import InvalidTransaction
from vdpchain.lib.blocks import SlashTx, SlashingEvidence
from vdpchain.lib.identity import HeaderSignature
from vdpchain.lib.ledger import MULTI_FORK, SAME_PARENT
from vdpchain.lib.slashing import (
    detect_equivocation, evidence_target, orphan_evidence, validate_evidence,
)
from vdpchain.lib.test_helpers import ChainFixture, VdpTestCase, fast_chain_config

class DetectionTest(VdpTestCase):
    def setUp(self):
        # type: () -> None
        self.fx = ChainFixture(validators=4)
        self.k0, self.k1, self.k2, self.k3 = self.fx.keys

    def test_honest_blocks_give_no_evidence(self):
        # type: () -> None
        fx = self.fx
        chain = fx.extend(fx.genesis, self.k0, 3)
        other = fx.add(chain[0], self.k1)
        for block in chain + [other]:
            self.assertEqual(detect_equivocation(fx.tree, block), [])

    def test_same_parent(self):
        # type: () -> None
        fx = self.fx
        a = fx.add(fx.genesis, self.k0, steps=1)
        b = fx.add(fx.genesis, self.k0, steps=2)
        self.assertNotEqual(a.digest, b.digest)
        evidence = detect_equivocation(fx.tree, b, self.k1.public_key)
        self.assertEqual(len(evidence), 1)
        ev = evidence[0]
        self.assertEqual(ev.kind, SAME_PARENT)
        self.assertEqual(ev.offender_pk, self.k0.public_key)
        self.assertEqual(ev.ref_digests(), [a.digest, b.digest])

        # Included on a's branch, the sibling b is the one penalized.
        c = fx.add(a, self.k1, [SlashTx(ev)])
        state = fx.store.state(c.digest)
        self.assertEqual(state.account(self.k0.public_key).staked, 0)
        self.assertFalse(state.is_active(self.k0.public_key))
        self.assertEqual(state.account(self.k1.public_key).balance, 5001)
        self.assertEqual(state.burned, 1000)
        receipt, = fx.store.receipts[c.digest]
        self.assertEqual(receipt.target, b.digest)
        self.assertEqual(receipt.burned, 1000)
        self.assertEqual(receipt.submitter_reward, 1)

        d = fx.add(b, self.k2, [SlashTx(ev)])
        self.assertEqual(fx.store.receipts[d.digest][0].target, a.digest)

        # The slashed key can no longer propose on a's branch.
        self.assertEqual(fx.store.admit(fx.make_block(c, self.k0)).reason,
                         'proposer_not_validator')

    def test_multi_fork(self):
        # type: () -> None
        fx = self.fx
        c1 = fx.add(fx.genesis, self.k0)
        x1 = fx.add(fx.genesis, self.k1)
        y = fx.add(x1, self.k0)
        evidence = detect_equivocation(fx.tree, y, self.k2.public_key)
        self.assertEqual([e.kind for e in evidence], [MULTI_FORK])
        ev = evidence[0]
        self.assertEqual(ev.ref_digests(), [c1.digest, y.digest])
        self.assertEqual(evidence_target(ev, fx.tree, y.digest), c1.digest)
        self.assertEqual(evidence_target(ev, fx.tree, c1.digest), y.digest)

        z = fx.add(y, self.k2, [SlashTx(ev)])
        state = fx.store.state(z.digest)
        self.assertEqual(state.account(self.k0.public_key).staked, 899)
        self.assertEqual(state.account(self.k2.public_key).balance, 5001)
        self.assertEqual(state.burned, 101)
        self.assertEqual(state.total_supply(), state.expected_supply())

        # Only the first inclusion of a given (offender, block) counts.
        again = fx.make_block(z, self.k2, [SlashTx(ev)])
        self.assertEqual(fx.store.admit(again).reason, 'invalid_transactions')

    def test_each_fresh_conflict_reported_once(self):
        # type: () -> None
        fx = self.fx
        c1 = fx.add(fx.genesis, self.k0)
        x1 = fx.add(fx.genesis, self.k1)
        y = fx.add(x1, self.k0)
        w1 = fx.add(fx.genesis, self.k3)
        w2 = fx.add(w1, self.k0)
        evidence = detect_equivocation(fx.tree, w2)
        self.assertEqual(sorted(e.ref_digests()[0] for e in evidence),
                         sorted([c1.digest, y.digest]))
        self.assertTrue(all(e.ref_digests()[1] == w2.digest for e in evidence))

    def test_reported_blocks_still_cover_the_new_one(self):
        # type: () -> None
        fx = self.fx
        c1 = fx.add(fx.genesis, self.k0)
        x1 = fx.add(fx.genesis, self.k1)
        y = fx.add(x1, self.k0)
        self.assertEqual(len(detect_equivocation(fx.tree, y)), 1)
        w1 = fx.add(fx.genesis, self.k3)
        w2 = fx.add(w1, self.k0)
        evidence = detect_equivocation(fx.tree, w2)
        self.assertEqual(len(evidence), 1)
        self.assertEqual(evidence[0].ref_digests(), [c1.digest, w2.digest])
        self.assertIn(w2.digest, fx.tree.reported)

class EvidenceValidationTest(VdpTestCase):
    def setUp(self):
        # type: () -> None
        self.fx = ChainFixture(validators=4)
        self.k0, self.k1, self.k2, self.k3 = self.fx.keys
        fx = self.fx
        self.c1 = fx.add(fx.genesis, self.k0)
        self.c2 = fx.add(self.c1, self.k0)
        self.x1 = fx.add(fx.genesis, self.k1)
        self.y = fx.add(self.x1, self.k0)

    def evidence(self, kind, *blocks, **kwargs):
        # type: (str, *Any, **Any) -> SlashingEvidence
        offender = kwargs.get('offender', self.k0.public_key)
        return SlashingEvidence(kind, offender, tuple(b.header for b in blocks),
                                self.k2.public_key)

    def assert_invalid(self, evidence, including_parent=None, config=None):
        # type: (SlashingEvidence, Optional[bytes], Any) -> None
        fx = self.fx
        with self.assertRaises(InvalidTransaction):
            validate_evidence(evidence, fx.tree, including_parent or self.y.digest,
                              config or fx.config, fx.suite)

    def test_valid(self):
        # type: () -> None
        fx = self.fx
        ev = self.evidence(MULTI_FORK, self.c2, self.y)
        self.assertEqual(validate_evidence(ev, fx.tree, self.y.digest, fx.config, fx.suite),
                         self.c2.digest)

    def test_rejections(self):
        # type: () -> None
        self.assert_invalid(self.evidence('bogus', self.c1, self.y))
        self.assert_invalid(self.evidence(MULTI_FORK, self.c1))
        self.assert_invalid(self.evidence(MULTI_FORK, self.c1, self.y,
                                          offender=self.k1.public_key))
        self.assert_invalid(self.evidence(MULTI_FORK, self.c1, self.x1))
        self.assert_invalid(self.evidence(MULTI_FORK, self.c1, self.c1))
        self.assert_invalid(self.evidence(MULTI_FORK, self.c1, self.c2))
        self.assert_invalid(self.evidence(SAME_PARENT, self.c1, self.y))

    def test_bad_signature(self):
        # type: () -> None
        forged = self.y.header._replace(signature=HeaderSignature(b'\x01' * 32))
        ev = SlashingEvidence(MULTI_FORK, self.k0.public_key, (self.c1.header, forged),
                              self.k2.public_key)
        self.assert_invalid(ev)

    def test_unknown_block(self):
        # type: () -> None
        fx = self.fx
        unseen = fx.make_block(self.x1, self.k0, steps=3)
        self.assert_invalid(self.evidence(MULTI_FORK, self.c1, unseen))

    def test_single_headers_need_slash_orphans(self):
        # type: () -> None
        fx = self.fx
        orphans = fast_chain_config(slash_orphans=True)
        ev = self.evidence(MULTI_FORK, self.c1)
        self.assertEqual(validate_evidence(ev, fx.tree, self.y.digest, orphans, fx.suite),
                         self.c1.digest)
        self.assert_invalid(ev, including_parent=self.c2.digest, config=orphans)
        self.assert_invalid(self.evidence(SAME_PARENT, self.c1), config=orphans)

class OrphanSlashingTest(VdpTestCase):
    def test_orphans_off_the_branch(self):
        # type: () -> None
        fx = ChainFixture(config=fast_chain_config(slash_orphans=True), validators=3)
        k0, k1, k2 = fx.keys
        c1 = fx.add(fx.genesis, k0)
        x1 = fx.add(fx.genesis, k1)
        x2 = fx.add(x1, k1)
        evidence = orphan_evidence(fx.tree, x2.digest, k0.public_key, k2.public_key)
        self.assertEqual([e.ref_digests() for e in evidence], [[c1.digest]])
        self.assertEqual(orphan_evidence(fx.tree, c1.digest, k0.public_key), [])

        x3 = fx.add(x2, k2, [SlashTx(evidence[0])])
        state = fx.store.state(x3.digest)
        self.assertEqual(state.account(k0.public_key).staked, 899)
        self.assertEqual(state.account(k2.public_key).balance, 5001)
