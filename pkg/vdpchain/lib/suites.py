"""
Protocol suites: the crypto the chain module runs on.

`RealSuite` is the protocol proper: RSA keys, the signature VRF and the
VDF puzzle.  `SimulationSuite` stands in for it in the fast simulator:
keyed hashes for the VRF and signatures (verified against a registry of
the keys the simulator created) and puzzle solutions whose step count
was sampled rather than computed, authenticated by a key only the
simulator's sampler holds.  Both expose the same operations, so blocks
built under either go through the same validation, ledger and slashing
code.
"""
from __future__ import absolute_import

from collections import namedtuple
from typing import Any, Dict, Optional, Tuple

import hashlib
import hmac

from vdpchain.exceptions import IdentityError, VdfError
from vdpchain.lib import identity, vdp
from vdpchain.lib.identity import HeaderSignature, KeyPair, VrfResult
from vdpchain.lib.utils import Verdict, ACCEPT, reject, int_to_bytes
from vdpchain.lib.vdf_core import MAX_STEPS, canonical_bytes, element_from_bytes, hash_to_group
from vdpchain.lib.vdp import PuzzleParams, PuzzleSolution

# Header-level view of a solution: what the header carries.
SolutionFields = namedtuple('SolutionFields', ['t', 'd', 'proof'])

class RealSuite(object):
    name = 'real'

    def __init__(self, puzzle_params, key_bits=None):
        # type: (PuzzleParams, Optional[int]) -> None
        self.puzzle = puzzle_params
        self.key_bits = key_bits

    def keygen(self, seed):
        # type: (bytes) -> KeyPair
        return identity.keygen(seed, self.key_bits)

    def vrf_eval(self, sk, seed):
        # type: (bytes, bytes) -> VrfResult
        return identity.vrf_eval(sk, seed)

    def vrf_verify(self, pk, seed, result):
        # type: (bytes, bytes, VrfResult) -> Verdict
        return identity.vrf_verify(pk, seed, result)

    def sign(self, sk, data):
        # type: (bytes, bytes) -> HeaderSignature
        return identity.sign_header(sk, data)

    def verify_sig(self, pk, data, sig):
        # type: (bytes, bytes, HeaderSignature) -> Verdict
        return identity.verify_header_sig(pk, data, sig)

    def genesis_d(self, config_digest):
        # type: (bytes) -> bytes
        return canonical_bytes(hash_to_group(config_digest, self.puzzle.vdf), self.puzzle.vdf)

    def instance_for(self, r):
        # type: (bytes) -> vdp.PuzzleInstance
        return vdp.make_instance(r, self.puzzle)

    def solve(self, r, budget=None, cancel=None):
        # type: (bytes, Optional[int], Optional[vdp.CancelToken]) -> SolutionFields
        solution = vdp.solve(self.instance_for(r), self.puzzle, budget=budget, cancel=cancel)
        return self.encode_solution(solution)

    def encode_solution(self, solution):
        # type: (PuzzleSolution) -> SolutionFields
        return SolutionFields(solution.t, canonical_bytes(solution.d, self.puzzle.vdf),
                              vdp.proof_bytes(solution.proof, self.puzzle))

    def decode_solution(self, fields):
        # type: (SolutionFields) -> PuzzleSolution
        return PuzzleSolution(fields.t, element_from_bytes(fields.d, self.puzzle.vdf),
                              vdp.proof_from_bytes(fields.proof, self.puzzle))

    def verify_solution(self, r, fields):
        # type: (bytes, SolutionFields) -> Verdict
        try:
            solution = self.decode_solution(fields)
        except VdfError:
            return reject('malformed_solution')
        return vdp.verify_solution(self.instance_for(r), solution, self.puzzle)

SIM_SK_DOMAIN = b'vdpchain/sim-sk'
SIM_PK_DOMAIN = b'vdpchain/sim-pk'
SIM_VRF_DOMAIN = b'vdpchain/sim-vrf'
SIM_SIG_DOMAIN = b'vdpchain/sim-sig'
SIM_D_DOMAIN = b'vdpchain/sim-d'
SIM_GENESIS_DOMAIN = b'vdpchain/sim-genesis'

class SimulationSuite(object):
    name = 'simulation'

    def __init__(self, oracle_seed=b'vdpchain/sim-oracle'):
        # type: (bytes) -> None
        self._registry = {}  # type: Dict[bytes, bytes]
        self._oracle_key = hashlib.sha256(oracle_seed).digest()

    def _mac(self, key, domain, data):
        # type: (bytes, bytes, bytes) -> bytes
        return hmac.new(key, domain + data, hashlib.sha256).digest()

    def keygen(self, seed):
        # type: (bytes) -> KeyPair
        if not seed:
            raise IdentityError('keygen needs a nonempty seed')
        sk = hashlib.sha256(SIM_SK_DOMAIN + seed).digest()
        pk = hashlib.sha256(SIM_PK_DOMAIN + sk).digest()
        self._registry[pk] = sk
        return KeyPair(sk, pk)

    def vrf_eval(self, sk, seed):
        # type: (bytes, bytes) -> VrfResult
        proof = self._mac(sk, SIM_VRF_DOMAIN, seed)
        return VrfResult(identity.vrf_output(proof), proof)

    def vrf_verify(self, pk, seed, result):
        # type: (bytes, bytes, VrfResult) -> Verdict
        sk = self._registry.get(pk)
        if sk is None:
            return reject('malformed_key')
        if not hmac.compare_digest(self._mac(sk, SIM_VRF_DOMAIN, seed), result.proof):
            return reject('bad_proof')
        if identity.vrf_output(result.proof) != result.output_r:
            return reject('output_mismatch')
        return ACCEPT

    def sign(self, sk, data):
        # type: (bytes, bytes) -> HeaderSignature
        return HeaderSignature(self._mac(sk, SIM_SIG_DOMAIN, data))

    def verify_sig(self, pk, data, sig):
        # type: (bytes, bytes, HeaderSignature) -> Verdict
        sk = self._registry.get(pk)
        if sk is None:
            return reject('malformed_key')
        if not hmac.compare_digest(self._mac(sk, SIM_SIG_DOMAIN, data), sig.signature):
            return reject('bad_signature')
        return ACCEPT

    def genesis_d(self, config_digest):
        # type: (bytes) -> bytes
        return hashlib.sha256(SIM_GENESIS_DOMAIN + config_digest).digest()

    def instance_for(self, r):
        # type: (bytes) -> vdp.PuzzleInstance
        """No group element: simulated solutions are never squared out."""
        return vdp.PuzzleInstance(r, None)

    def issue_solution(self, r, t):
        # type: (bytes, int) -> SolutionFields
        """A solution for input r whose step count t was sampled."""
        if not 1 <= t <= MAX_STEPS:
            raise VdfError('simulated solutions need 1 <= t < 2^64')
        t_bytes = int_to_bytes(t, 8)
        d = hashlib.sha256(SIM_D_DOMAIN + r + t_bytes).digest()
        return SolutionFields(t, d, self._mac(self._oracle_key, b'', r + t_bytes + d))

    def verify_solution(self, r, fields):
        # type: (bytes, SolutionFields) -> Verdict
        if not isinstance(fields.t, int) or fields.t < 1:
            return reject('t_too_small')
        if fields.t > MAX_STEPS:
            return reject('vdf_invalid')
        t_bytes = int_to_bytes(fields.t, 8)
        if fields.d != hashlib.sha256(SIM_D_DOMAIN + r + t_bytes).digest():
            return reject('vdf_invalid')
        expected = self._mac(self._oracle_key, b'', r + t_bytes + fields.d)
        if not hmac.compare_digest(expected, fields.proof):
            return reject('vdf_invalid')
        return ACCEPT
