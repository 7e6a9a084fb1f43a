"""
The verifiable delay puzzle: a VDF evaluation d = H(r)^(2^t) whose
digest K(d) must fall under the threshold gamma * M.

Solvers square one step at a time from t = 1 and stop at the first t that
meets the threshold, so the number of steps is geometric with parameter
gamma.  Verifiers check the VDF proof and the threshold but cannot check
that t was minimal; a larger t only delays its own proposer.
"""
from __future__ import absolute_import

from collections import namedtuple
from fractions import Fraction
from typing import Any, Dict, Optional

import hashlib
import logging
import threading

import numpy as np

from vdpchain.exceptions import (
    BudgetExhausted, PuzzleError, SolveCancelled, VdfError,
)
from vdpchain.lib.config import format_fraction, get_setting, parse_fraction
from vdpchain.lib.utils import Verdict, ACCEPT, reject, int_to_bytes, bytes_to_int
from vdpchain.lib.vdf_core import (
    EvalState, GroupElement, VdfParams, VdfProof, canonical_bytes,
    MAX_STEPS, default_vdf_params, element_from_bytes, eval_step, hash_to_group, prove,
    verify_vdf,
)

logger = logging.getLogger('vdpchain')

MAX_HASH = 2 ** 256 - 1

THRESHOLD_HASHES = {
    'sha256': hashlib.sha256,
    'sha3_256': hashlib.sha3_256,
    'blake2s': hashlib.blake2s,
}

class PuzzleParams(namedtuple('PuzzleParams', ['gamma', 'threshold_hash_id', 'max_hash', 'vdf'])):
    __slots__ = ()

    def validate(self):
        # type: () -> PuzzleParams
        if not isinstance(self.gamma, Fraction) or not (0 < self.gamma <= 1):
            raise PuzzleError('gamma must be a rational in (0, 1]')
        if self.threshold_hash_id not in THRESHOLD_HASHES:
            raise PuzzleError('unknown threshold hash %r' % (self.threshold_hash_id,))
        if threshold(self) < 1:
            raise PuzzleError('gamma is too small: the threshold rounds down to 0')
        return self

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'gamma': format_fraction(self.gamma),
                'threshold_hash_id': self.threshold_hash_id,
                'vdf': self.vdf.to_dict()}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> PuzzleParams
        vdf = VdfParams.from_dict(d['vdf']) if 'vdf' in d else default_vdf_params()
        return PuzzleParams(gamma=parse_fraction(d.get('gamma', get_setting('PUZZLE_GAMMA')), 'gamma'),
                            threshold_hash_id=d.get('threshold_hash_id',
                                                    get_setting('PUZZLE_THRESHOLD_HASH')),
                            max_hash=MAX_HASH,
                            vdf=vdf).validate()

def default_puzzle_params(gamma=None, vdf=None):
    # type: (Any, Optional[VdfParams]) -> PuzzleParams
    if gamma is None:
        gamma = get_setting('PUZZLE_GAMMA')
    return PuzzleParams(gamma=parse_fraction(gamma, 'gamma'),
                        threshold_hash_id=get_setting('PUZZLE_THRESHOLD_HASH'),
                        max_hash=MAX_HASH,
                        vdf=vdf or default_vdf_params()).validate()

class PuzzleInstance(namedtuple('PuzzleInstance', ['input_r', 'base'])):
    __slots__ = ()

    def to_dict(self):
        # type: () -> Dict[str, str]
        return {'input_r': self.input_r.hex(), 'base': '%x' % (self.base.value,)}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> PuzzleInstance
        return PuzzleInstance(bytes.fromhex(d['input_r']), GroupElement(int(d['base'], 16)))

class PuzzleSolution(namedtuple('PuzzleSolution', ['t', 'd', 'proof'])):
    __slots__ = ()

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'t': self.t, 'd': '%x' % (self.d.value,), 'proof': self.proof.to_dict()}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> PuzzleSolution
        return PuzzleSolution(int(d['t']), GroupElement(int(d['d'], 16)),
                              VdfProof.from_dict(d['proof']))

class CancelToken(object):
    """Fired from another thread (a competing block arrived); the solver
    checks it between squarings."""

    def __init__(self):
        # type: () -> None
        self._event = threading.Event()

    def cancel(self):
        # type: () -> None
        self._event.set()

    @property
    def cancelled(self):
        # type: () -> bool
        return self._event.is_set()

def make_instance(input_r, params):
    # type: (bytes, PuzzleParams) -> PuzzleInstance
    return PuzzleInstance(input_r, hash_to_group(input_r, params.vdf))

def threshold(params):
    # type: (PuzzleParams) -> int
    return params.gamma.numerator * params.max_hash // params.gamma.denominator

def threshold_hash(d, params):
    # type: (GroupElement, PuzzleParams) -> int
    """K(d): the digest of d's canonical encoding as an unsigned integer."""
    digest = THRESHOLD_HASHES[params.threshold_hash_id](canonical_bytes(d, params.vdf)).digest()
    return bytes_to_int(digest)

def solve(instance, params, budget=None, cancel=None):
    # type: (PuzzleInstance, PuzzleParams, Optional[int], Optional[CancelToken]) -> PuzzleSolution
    m = threshold(params)
    state = EvalState(instance.base, instance.base, 0)
    while True:
        if cancel is not None and cancel.cancelled:
            raise SolveCancelled('solve cancelled after %d steps' % (state.steps_done,))
        if budget is not None and state.steps_done >= budget:
            raise BudgetExhausted('no solution within %d steps' % (budget,))
        state = eval_step(state, params.vdf)
        if threshold_hash(state.current, params) <= m:
            break
    proof = prove(instance.base, state.steps_done, state.current, params.vdf)
    logger.debug('puzzle solved at t=%d', state.steps_done)
    return PuzzleSolution(state.steps_done, state.current, proof)

def verify_solution(instance, solution, params):
    # type: (PuzzleInstance, PuzzleSolution, PuzzleParams) -> Verdict
    if not isinstance(solution.t, int) or solution.t < 1:
        return reject('t_too_small')
    try:
        if hash_to_group(instance.input_r, params.vdf) != instance.base:
            return reject('instance_mismatch')
    except VdfError:
        return reject('instance_mismatch')
    if solution.t > MAX_STEPS:
        return reject('vdf_invalid')
    if not verify_vdf(instance.base, solution.t, solution.d, solution.proof, params.vdf):
        return reject('vdf_invalid')
    if threshold_hash(solution.d, params) > threshold(params):
        return reject('threshold_unmet')
    return ACCEPT

def sample_solve_steps(gamma, rng, size=None):
    # type: (Fraction, np.random.Generator, Any) -> Any
    """Steps-to-solution under the per-step Bernoulli(gamma) model: the
    statistical surrogate for `solve` used by the fast simulator."""
    return rng.geometric(float(gamma), size=size)

def solution_bytes(solution, params):
    # type: (PuzzleSolution, PuzzleParams) -> bytes
    """t as u64 big-endian, then d, pi and l; the bytes hashed into headers."""
    return (int_to_bytes(solution.t, 8) + canonical_bytes(solution.d, params.vdf) +
            proof_bytes(solution.proof, params))

def proof_bytes(proof, params):
    # type: (VdfProof, PuzzleParams) -> bytes
    return canonical_bytes(proof.quotient_element, params.vdf) + int_to_bytes(proof.challenge_prime)

def proof_from_bytes(data, params):
    # type: (bytes, PuzzleParams) -> VdfProof
    size = params.vdf.byte_length
    if len(data) <= size:
        raise VdfError('proof encoding too short')
    return VdfProof(element_from_bytes(data[:size], params.vdf), bytes_to_int(data[size:]))
