"""
Validator keys, the VRF that assigns each validator its puzzle input,
and header signatures.

Both the VRF and header signatures are RSA PKCS#1 v1.5 signatures, which
are deterministic: a key has exactly one valid signature per message.
The VRF output is the hash of that signature, so it is unique per
(key, seed) and the signature itself is the proof.  The two uses sign
under different domain prefixes.

Keys are derived from a seed, not OS entropy: one seed, one key.
"""
from __future__ import absolute_import

from collections import namedtuple
from typing import Dict, Optional

import functools
import gmpy2
import hashlib
import logging

from cryptography.exceptions import InvalidSignature, UnsupportedAlgorithm
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa

from vdpchain.exceptions import IdentityError
from vdpchain.lib.config import get_setting
from vdpchain.lib.utils import Verdict, ACCEPT, reject

logger = logging.getLogger('vdpchain')

PUBLIC_EXPONENT = 65537
KEYGEN_DOMAIN = b'vdpchain/keygen'
VRF_DOMAIN = b'vdpchain/vrf-input'
VRF_OUTPUT_DOMAIN = b'vdpchain/vrf-output'
HEADER_DOMAIN = b'vdpchain/header'

# Entries in the parsed public key cache.
PUBLIC_KEY_CACHE_SIZE = 1024

KeyPair = namedtuple('KeyPair', ['secret_key', 'public_key'])
VrfResult = namedtuple('VrfResult', ['output_r', 'proof'])
HeaderSignature = namedtuple('HeaderSignature', ['signature'])

_private_keys = {}  # type: Dict[bytes, rsa.RSAPrivateKey]

def _seeded_prime(seed, label, bits):
    # type: (bytes, bytes, int) -> int
    counter = 0
    while True:
        material = hashlib.shake_256(KEYGEN_DOMAIN + label + counter.to_bytes(4, 'big') + seed)
        x = int.from_bytes(material.digest((bits + 7) // 8), 'big')
        x &= (1 << bits) - 1
        x |= (3 << (bits - 2)) | 1
        p = int(gmpy2.next_prime(x))
        if p.bit_length() == bits and gmpy2.gcd(PUBLIC_EXPONENT, p - 1) == 1:
            return p
        counter += 1

def keygen(seed, key_bits=None):
    # type: (bytes, Optional[int]) -> KeyPair
    if not seed:
        raise IdentityError('keygen needs a nonempty seed')
    bits = key_bits or get_setting('IDENTITY_KEY_BITS')
    p = _seeded_prime(seed, b'p', bits // 2)
    q = _seeded_prime(seed, b'q', bits - bits // 2)
    if p == q:
        raise IdentityError('degenerate key material')
    lam = int(gmpy2.lcm(p - 1, q - 1))
    d = int(gmpy2.invert(PUBLIC_EXPONENT, lam))
    public_numbers = rsa.RSAPublicNumbers(PUBLIC_EXPONENT, p * q)
    private_numbers = rsa.RSAPrivateNumbers(
        p=p, q=q, d=d,
        dmp1=rsa.rsa_crt_dmp1(d, p),
        dmq1=rsa.rsa_crt_dmq1(d, q),
        iqmp=rsa.rsa_crt_iqmp(p, q),
        public_numbers=public_numbers)
    key = private_numbers.private_key()
    secret_key = key.private_bytes(serialization.Encoding.DER,
                                   serialization.PrivateFormat.PKCS8,
                                   serialization.NoEncryption())
    public_key = key.public_key().public_bytes(serialization.Encoding.DER,
                                               serialization.PublicFormat.SubjectPublicKeyInfo)
    _private_keys[secret_key] = key
    return KeyPair(secret_key, public_key)

def _load_private(sk):
    # type: (bytes) -> rsa.RSAPrivateKey
    key = _private_keys.get(sk)
    if key is None:
        try:
            key = serialization.load_der_private_key(sk, password=None)
        except (ValueError, TypeError, UnsupportedAlgorithm):
            raise IdentityError('malformed secret key')
        if not isinstance(key, rsa.RSAPrivateKey):
            raise IdentityError('secret key is not an RSA key')
        _private_keys[sk] = key
    return key

@functools.lru_cache(maxsize=PUBLIC_KEY_CACHE_SIZE)
def _load_public(pk):
    # type: (bytes) -> Optional[rsa.RSAPublicKey]
    try:
        key = serialization.load_der_public_key(pk)
    except (ValueError, TypeError, UnsupportedAlgorithm):
        return None
    if not isinstance(key, rsa.RSAPublicKey):
        return None
    return key

def public_key_of(sk):
    # type: (bytes) -> bytes
    return _load_private(sk).public_key().public_bytes(
        serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo)

def _sign(sk, message):
    # type: (bytes, bytes) -> bytes
    return _load_private(sk).sign(message, padding.PKCS1v15(), hashes.SHA256())

def _verify(pk, message, signature):
    # type: (bytes, bytes, bytes) -> Optional[str]
    if not isinstance(pk, bytes):
        return 'malformed_key'
    key = _load_public(pk)
    if key is None:
        return 'malformed_key'
    if not isinstance(signature, bytes) or len(signature) != (key.key_size + 7) // 8:
        return 'malformed_signature'
    try:
        key.verify(signature, message, padding.PKCS1v15(), hashes.SHA256())
    except InvalidSignature:
        return 'bad_signature'
    return None

def vrf_output(proof):
    # type: (bytes) -> bytes
    return hashlib.sha256(VRF_OUTPUT_DOMAIN + proof).digest()

def vrf_eval(sk, seed):
    # type: (bytes, bytes) -> VrfResult
    proof = _sign(sk, VRF_DOMAIN + seed)
    return VrfResult(vrf_output(proof), proof)

def vrf_verify(pk, seed, result):
    # type: (bytes, bytes, VrfResult) -> Verdict
    error = _verify(pk, VRF_DOMAIN + seed, result.proof)
    if error == 'bad_signature':
        return reject('bad_proof')
    if error is not None:
        return reject(error)
    if vrf_output(result.proof) != result.output_r:
        return reject('output_mismatch')
    return ACCEPT

def sign_header(sk, header_bytes):
    # type: (bytes, bytes) -> HeaderSignature
    return HeaderSignature(_sign(sk, HEADER_DOMAIN + header_bytes))

def verify_header_sig(pk, header_bytes, sig):
    # type: (bytes, bytes, HeaderSignature) -> Verdict
    error = _verify(pk, HEADER_DOMAIN + header_bytes, sig.signature)
    if error is not None:
        return reject(error)
    return ACCEPT
