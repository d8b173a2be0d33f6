"""Bit-string and byte-level helpers shared across the package.

Bit-strings are 1-D ``uint8`` arrays holding 0/1 values. Packing into bytes is
MSB-first, matching ``numpy.packbits``.
"""
from __future__ import annotations

import struct

import numpy as np


class DecodeError(ValueError):
    """Raised when a binary artifact cannot be parsed."""


def as_bits(x) -> np.ndarray:
    if isinstance(x, str):
        if any(ch not in "01" for ch in x):
            raise ValueError(f"not a bit-string: {x!r}")
        return np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(x, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit arrays must hold only 0/1")
    return arr


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def bytes_to_bits(data: bytes, nbits: int | None = None) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if nbits is not None:
        if nbits > bits.size:
            raise DecodeError("not enough bytes for requested bit length")
        bits = bits[:nbits]
    return bits


def bits_to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def ints_to_bits(values, width: int) -> np.ndarray:
    """Big-endian fixed-width encoding of each value, concatenated."""
    v = np.asarray(values, dtype=np.int64).reshape(-1, 1)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((v >> shifts) & 1).astype(np.uint8).ravel()


def bits_to_ints(bits, width: int) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64).reshape(-1, width)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return b @ weights


# -- varints and framing ---------------------------------------------------

def encode_varint(n: int) -> bytes:
    if n < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


class Reader:
    """Cursor over a byte buffer; every read raises DecodeError on underrun."""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise DecodeError("truncated input")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def expect(self, magic: bytes) -> None:
        if self.take(len(magic)) != magic:
            raise DecodeError(f"bad magic, expected {magic!r}")

    def varint(self) -> int:
        shift = 0
        value = 0
        while True:
            byte = self.take(1)[0]
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return value
            shift += 7
            if shift > 63:
                raise DecodeError("varint too long")

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> bool:
        return self.pos == len(self.data)

    def finish(self) -> None:
        if not self.done():
            raise DecodeError("trailing bytes")


def u16(n: int) -> bytes:
    return struct.pack("<H", n)


def u32(n: int) -> bytes:
    return struct.pack("<I", n)


def blob(data: bytes) -> bytes:
    return u32(len(data)) + data
