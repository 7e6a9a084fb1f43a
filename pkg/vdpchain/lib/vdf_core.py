"""
Sequential repeated squaring over a hidden-order group, with compact
proofs verifiable at any step count.

Evaluation computes d = g^(2^t) by t squarings.  A proof for (g, t, d)
is the pair (pi, l) where l is a prime derived from a Fiat-Shamir
transcript of (g, d, t) and pi = g^floor(2^t / l); the verifier checks
pi^l * g^(2^t mod l) == d, which costs a handful of exponentiations with
exponents no larger than l no matter how large t is.

The group is Z*_N for a configured RSA-style modulus N.  Everything
group-specific goes through `RsaGroup`, so a second backend only has to
supply the same handful of operations.
"""
from __future__ import absolute_import

from collections import namedtuple
from typing import Any, Dict, Optional, Tuple

import gmpy2
import hashlib

from vdpchain.exceptions import VdfError
from vdpchain.lib.config import get_setting
from vdpchain.lib.utils import Verdict, ACCEPT, reject, int_to_bytes

HASH_TO_GROUP_MODES = ('production', 'test_passthrough')
PROOF_STRATEGIES = ('long_division', 'direct_exponent')

H2G_DOMAIN = b'vdpchain/hash-to-group'
CHALLENGE_DOMAIN = b'vdpchain/vdf-challenge'
MODULUS_DOMAIN = b'vdpchain/modulus'

# Step counts travel as u64 in transcripts and headers.
MAX_STEPS = (1 << 64) - 1

GroupElement = namedtuple('GroupElement', ['value'])
EvalState = namedtuple('EvalState', ['base', 'current', 'steps_done'])

class VdfProof(namedtuple('VdfProof', ['quotient_element', 'challenge_prime'])):
    __slots__ = ()

    def to_dict(self):
        # type: () -> Dict[str, str]
        return {'quotient_element': '%x' % (self.quotient_element.value,),
                'challenge_prime': '%x' % (self.challenge_prime,)}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> VdfProof
        return VdfProof(GroupElement(int(d['quotient_element'], 16)),
                        int(d['challenge_prime'], 16))

class VdfParams(namedtuple('VdfParams', ['modulus', 'modulus_bits', 'security_param',
                                         'hash_to_group_id'])):
    __slots__ = ()

    @property
    def byte_length(self):
        # type: () -> int
        return (self.modulus_bits + 7) // 8

    def validate(self):
        # type: () -> VdfParams
        n = self.modulus
        if not isinstance(n, int) or n < 15 or n % 2 == 0:
            raise VdfError('modulus must be an odd integer >= 15')
        if self.modulus_bits != n.bit_length():
            raise VdfError('modulus_bits is %d but the modulus has %d bits'
                           % (self.modulus_bits, n.bit_length()))
        if self.hash_to_group_id not in HASH_TO_GROUP_MODES:
            raise VdfError('unknown hash_to_group_id %r' % (self.hash_to_group_id,))
        if self.security_param < 2:
            raise VdfError('security_param must be at least 2')
        if self.hash_to_group_id == 'production' and self.security_param < 16:
            raise VdfError('security_param must be at least 16 in production mode')
        return self

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'modulus': '%x' % (self.modulus,),
                'modulus_bits': self.modulus_bits,
                'security_param': self.security_param,
                'hash_to_group_id': self.hash_to_group_id}

    @staticmethod
    def from_dict(d):
        # type: (Dict[str, Any]) -> VdfParams
        try:
            if 'modulus' in d:
                modulus = d['modulus']
            else:
                modulus = generate_modulus(int(d['modulus_bits']),
                                           d.get('modulus_seed', get_setting('VDF_MODULUS_SEED')))
            if isinstance(modulus, str):
                modulus = int(modulus, 16)
            params = VdfParams(modulus=modulus,
                               modulus_bits=d.get('modulus_bits', modulus.bit_length()),
                               security_param=d.get('security_param',
                                                    get_setting('VDF_SECURITY_PARAM')),
                               hash_to_group_id=d.get('hash_to_group_id',
                                                      get_setting('VDF_HASH_TO_GROUP')))
        except (KeyError, ValueError, TypeError, AttributeError) as e:
            raise VdfError('malformed vdf params: %s' % (e,))
        return params.validate()

class RsaGroup(object):
    """Z*_N arithmetic.  Elements are plain ints in [1, N-1]."""

    def __init__(self, modulus):
        # type: (int) -> None
        self.modulus = modulus
        self._n = gmpy2.mpz(modulus)

    def contains(self, value):
        # type: (Any) -> bool
        return isinstance(value, int) and 1 <= value < self.modulus

    def square(self, value):
        # type: (int) -> int
        return int(gmpy2.powmod(value, 2, self._n))

    def mul(self, a, b):
        # type: (int, int) -> int
        return int(gmpy2.mpz(a) * b % self._n)

    def power(self, value, exponent):
        # type: (int, int) -> int
        return int(gmpy2.powmod(value, exponent, self._n))

    def square_repeatedly(self, value, times):
        # type: (int, int) -> int
        x = gmpy2.mpz(value)
        n = self._n
        for _ in range(times):
            x = x * x % n
        return int(x)

_groups = {}  # type: Dict[int, RsaGroup]

def group_for(params):
    # type: (VdfParams) -> RsaGroup
    group = _groups.get(params.modulus)
    if group is None:
        group = RsaGroup(params.modulus)
        _groups[params.modulus] = group
    return group

def _shake(domain, counter, data, length):
    # type: (bytes, int, bytes, int) -> int
    h = hashlib.shake_256(domain + counter.to_bytes(4, 'big') + data)
    return int.from_bytes(h.digest(length), 'big')

def _seeded_prime(seed, label, bits):
    # type: (bytes, bytes, int) -> int
    x = _shake(MODULUS_DOMAIN + label, 0, seed, (bits + 7) // 8)
    x &= (1 << bits) - 1
    x |= (3 << (bits - 2)) | 1
    return int(gmpy2.next_prime(x))

def generate_modulus(bits, seed):
    # type: (int, str) -> int
    """Deterministic product of two seeded primes of bits/2 bits each.

    The factors are recoverable by anyone who knows the seed; that is the
    desk-scale trusted setup, not a hidden-order group anyone should rely on."""
    if bits < 8:
        raise VdfError('modulus_bits must be at least 8')
    seed_bytes = seed.encode('utf-8')
    half = bits // 2
    counter = 0
    while True:
        p = _seeded_prime(seed_bytes, b'p%d' % (counter,), bits - half)
        q = _seeded_prime(seed_bytes, b'q%d' % (counter,), half)
        n = p * q
        if q != p and n.bit_length() == bits:
            return n
        counter += 1

_default_params = {}  # type: Dict[Tuple[Any, ...], VdfParams]

def default_vdf_params(modulus_bits=None, security_param=None, hash_to_group_id=None):
    # type: (Optional[int], Optional[int], Optional[str]) -> VdfParams
    modulus = get_setting('VDF_MODULUS')
    bits = modulus_bits or get_setting('VDF_MODULUS_BITS')
    seed = get_setting('VDF_MODULUS_SEED')
    xi = security_param or get_setting('VDF_SECURITY_PARAM')
    mode = hash_to_group_id or get_setting('VDF_HASH_TO_GROUP')
    key = (modulus, bits, seed, xi, mode)
    if key not in _default_params:
        if modulus is None or modulus_bits is not None:
            modulus = generate_modulus(bits, seed)
        _default_params[key] = VdfParams(modulus, modulus.bit_length(), xi, mode).validate()
    return _default_params[key]

def canonical_bytes(element, params):
    # type: (GroupElement, VdfParams) -> bytes
    """Big-endian, zero-padded to the modulus byte length."""
    if not group_for(params).contains(element.value):
        raise VdfError('group element out of range')
    return element.value.to_bytes(params.byte_length, 'big')

def element_from_bytes(data, params):
    # type: (bytes, VdfParams) -> GroupElement
    if len(data) != params.byte_length:
        raise VdfError('group element encoding must be %d bytes' % (params.byte_length,))
    value = int.from_bytes(data, 'big')
    if not group_for(params).contains(value):
        raise VdfError('group element out of range')
    return GroupElement(value)

def hash_to_group(data, params):
    # type: (bytes, VdfParams) -> GroupElement
    n = params.modulus
    if params.hash_to_group_id == 'test_passthrough':
        h = int.from_bytes(data, 'big') % n
    else:
        h = _shake(H2G_DOMAIN, 0, data, params.byte_length + 16) % n
    counter = 1
    while gmpy2.gcd(h, n) != 1:
        h = _shake(H2G_DOMAIN, counter, data, params.byte_length + 16) % n
        counter += 1
    return GroupElement(group_for(params).square(h))

def eval_step(state, params):
    # type: (EvalState, VdfParams) -> EvalState
    current = group_for(params).square(state.current.value)
    return EvalState(state.base, GroupElement(current), state.steps_done + 1)

def eval_to(g, t, params):
    # type: (GroupElement, int, VdfParams) -> GroupElement
    if t < 0:
        raise VdfError('t must be non-negative')
    return GroupElement(group_for(params).square_repeatedly(g.value, t))

def derive_challenge_prime(g, d, t, params):
    # type: (GroupElement, GroupElement, int, VdfParams) -> int
    """Next prime >= a security_param-bit digest of the transcript (g, d, t)."""
    xi = params.security_param
    transcript = (canonical_bytes(g, params) + canonical_bytes(d, params) +
                  int_to_bytes(t, 8))
    x = _shake(CHALLENGE_DOMAIN, 0, transcript, (xi + 7) // 8)
    x &= (1 << xi) - 1
    x |= 1 << (xi - 1)
    if gmpy2.is_prime(x, 50):
        return x
    return int(gmpy2.next_prime(x))

def _quotient_long_division(group, g, t, ell):
    # type: (RsaGroup, int, int, int) -> int
    # Bits of floor(2^t / ell) come out of schoolbook division one per
    # squaring; the remainder never exceeds ell.
    n = gmpy2.mpz(group.modulus)
    g_mpz = gmpy2.mpz(g)
    x = gmpy2.mpz(1)
    r = 1
    for _ in range(t):
        r2 = 2 * r
        x = x * x % n
        if r2 >= ell:
            x = x * g_mpz % n
            r = r2 - ell
        else:
            r = r2
    return int(x)

def _quotient_direct(group, g, t, ell):
    # type: (RsaGroup, int, int, int) -> int
    return group.power(g, (1 << t) // ell)

_proof_strategies = {
    'long_division': _quotient_long_division,
    'direct_exponent': _quotient_direct,
}

def prove(g, t, d, params, strategy=None):
    # type: (GroupElement, int, GroupElement, VdfParams, Optional[str]) -> VdfProof
    if strategy is None:
        strategy = get_setting('VDF_PROOF_STRATEGY')
    if strategy not in _proof_strategies:
        raise VdfError('unknown proof strategy %r' % (strategy,))
    ell = derive_challenge_prime(g, d, t, params)
    quotient = _proof_strategies[strategy](group_for(params), g.value, t, ell)
    return VdfProof(GroupElement(quotient), ell)

def verify_vdf(g, t, d, proof, params):
    # type: (GroupElement, int, GroupElement, VdfProof, VdfParams) -> Verdict
    group = group_for(params)
    pi = proof.quotient_element
    if not (group.contains(g.value) and group.contains(d.value) and group.contains(pi.value)):
        return reject('malformed_element')
    if not isinstance(t, int) or t < 0 or t > MAX_STEPS:
        return reject('malformed_t')
    if not isinstance(proof.challenge_prime, int) or proof.challenge_prime < 2:
        return reject('malformed_proof')

    ell = derive_challenge_prime(g, d, t, params)
    if ell != proof.challenge_prime:
        return reject('challenge_mismatch')

    r = int(gmpy2.powmod(2, t, ell))
    lhs = group.mul(group.power(pi.value, ell), group.power(g.value, r))
    if lhs != d.value:
        return reject('equation_mismatch')
    return ACCEPT
