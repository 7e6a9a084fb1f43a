# -*- coding: utf-8 -*-
from __future__ import absolute_import
from __future__ import division

from collections import namedtuple
from typing import Iterable, Optional
import struct

class Verdict(namedtuple('Verdict', ['accepted', 'reason'])):
    """Outcome of a verification.  Verifiers never raise on bad input;
    they return a rejection whose `reason` is a stable string code."""
    __slots__ = ()

    def __bool__(self):
        # type: () -> bool
        return bool(self.accepted)

    def to_dict(self):
        # type: () -> dict
        return {'accepted': self.accepted, 'reason': self.reason}

ACCEPT = Verdict(True, 'ok')

def reject(reason):
    # type: (str) -> Verdict
    return Verdict(False, reason)

def int_to_bytes(value, length=None):
    # type: (int, Optional[int]) -> bytes
    """Unsigned big-endian; minimal length unless `length` is given."""
    if length is None:
        length = max(1, (value.bit_length() + 7) // 8)
    return int(value).to_bytes(length, 'big')

def bytes_to_int(data):
    # type: (bytes) -> int
    return int.from_bytes(data, 'big')

def length_prefixed(fields):
    # type: (Iterable[bytes]) -> bytes
    return b''.join(struct.pack('>I', len(field)) + field for field in fields)
