"""Toy PRF: a keyed sponge over a 128-bit rotation/XOR/chi permutation.

Chosen for cheap circuit compilation, not for security. The input string is
first hashed with SHA-256 (a public computation), so the circuit only ever
absorbs a 256-bit digest no matter how long the instance is.

Sponge layout: state of 128 bits, rate 64. The key is absorbed first (padded
with a single 1 bit and zeros to a multiple of the rate), then the digest
(same padding), then output is squeezed 64 bits per permutation call.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..bits import Reader, as_bits, bits_to_bytes, bytes_to_bits, u16, u32
from ..rng import ensure, random_bits

WIDTH = 128
RATE = 64
ROUNDS = 6
ROT_A = 7
ROT_B = 29

_RC = np.stack([
    np.unpackbits(np.frombuffer(hashlib.sha256(b"mdvnizk/prf/rc" + bytes([r])).digest()[:16], np.uint8))
    for r in range(ROUNDS)
])


@dataclass(frozen=True, eq=False)
class PrfKey:
    key_bits: np.ndarray
    out_len: int

    @property
    def lam(self) -> int:
        return int(self.key_bits.size)

    def __eq__(self, other):
        return (isinstance(other, PrfKey) and self.out_len == other.out_len
                and np.array_equal(self.key_bits, other.key_bits))

    __hash__ = None

    def to_bytes(self) -> bytes:
        return b"PRF1" + u16(self.lam) + u32(self.out_len) + bits_to_bytes(self.key_bits)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PrfKey":
        r = Reader(data)
        r.expect(b"PRF1")
        lam = r.u16()
        out_len = r.u32()
        key = bytes_to_bits(r.take(-(-lam // 8)), lam)
        r.finish()
        return cls(key, out_len)


def prf_gen(lam: int, out_len: int, rng: np.random.Generator | None = None) -> PrfKey:
    if lam < 16:
        raise ValueError("security parameter must be at least 16")
    if out_len < 1:
        raise ValueError("output length must be positive")
    return PrfKey(random_bits(ensure(rng), lam), out_len)


def prf_eval(key: PrfKey, x: bytes) -> np.ndarray:
    return prf_stream(key.key_bits, x, key.out_len)


# -- direct implementation -------------------------------------------------------

def _permute(s: np.ndarray) -> np.ndarray:
    s = s.copy()
    for r in range(ROUNDS):
        s ^= _RC[r]
        s = s ^ np.roll(s, -ROT_A) ^ np.roll(s, -ROT_B)
        s = s ^ ((1 - np.roll(s, -1)) & np.roll(s, -2))
    return s


def _pad(bits: np.ndarray) -> np.ndarray:
    n = bits.size + 1
    total = -(-n // RATE) * RATE
    out = np.zeros(total, dtype=np.uint8)
    out[:bits.size] = bits
    out[bits.size] = 1
    return out


def _digest_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(hashlib.sha256(data).digest(), np.uint8))


def prf_stream(key_bits, data: bytes, nbits: int) -> np.ndarray:
    """``nbits`` of keyed output on ``data``; prefixes agree across lengths."""
    s = np.zeros(WIDTH, dtype=np.uint8)
    for chunk in (_pad(as_bits(key_bits)), _pad(_digest_bits(data))):
        for i in range(0, chunk.size, RATE):
            s[:RATE] ^= chunk[i:i + RATE]
            s = _permute(s)
    out = []
    have = 0
    while have < nbits:
        if have:
            s = _permute(s)
        out.append(s[:RATE].copy())
        have += RATE
    return np.concatenate(out)[:nbits] if out else np.zeros(0, np.uint8)


# -- circuit gadget ---------------------------------------------------------------

def _permute_gadget(bld, s: np.ndarray) -> np.ndarray:
    for r in range(ROUNDS):
        s = bld.xor(s, bld.const(_RC[r]))
        s = bld.xor(bld.xor(s, np.roll(s, -ROT_A)), np.roll(s, -ROT_B))
        s = bld.xor(s, bld.and_(bld.not_(np.roll(s, -1)), np.roll(s, -2)))
    return s


def prf_stream_gadget(bld, key_refs: np.ndarray, data: bytes, nbits: int) -> np.ndarray:
    """Circuit mirror of :func:`prf_stream` with the key on ``key_refs``."""
    key_refs = np.asarray(key_refs, dtype=np.int64)
    padded_key = np.concatenate([key_refs, bld.const(_pad(np.zeros(key_refs.size, np.uint8))[key_refs.size:])])
    s = bld.const(np.zeros(WIDTH, np.uint8))
    for chunk in (padded_key, bld.const(_pad(_digest_bits(data)))):
        for i in range(0, chunk.size, RATE):
            s = np.concatenate([bld.xor(s[:RATE], chunk[i:i + RATE]), s[RATE:]])
            s = _permute_gadget(bld, s)
    out = []
    have = 0
    while have < nbits:
        if have:
            s = _permute_gadget(bld, s)
        out.append(s[:RATE])
        have += RATE
    return np.concatenate(out)[:nbits] if out else np.zeros(0, np.int64)

