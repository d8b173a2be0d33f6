"""Keyed-hash commitments used inside the sigma protocols."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..bits import u32

_KEY = b"mdvnizk/commit/v1"


@dataclass(frozen=True)
class Commitment:
    com: bytes
    opening: tuple[bytes, bytes]


def commit_digest(m: bytes, salt: bytes) -> bytes:
    return hashlib.blake2b(u32(len(salt)) + salt + m, key=_KEY, digest_size=32).digest()


def commit(m: bytes, salt: bytes) -> Commitment:
    return Commitment(commit_digest(m, salt), (m, salt))


def verify_open(com: bytes, m: bytes, salt: bytes) -> bool:
    return com == commit_digest(m, salt)
