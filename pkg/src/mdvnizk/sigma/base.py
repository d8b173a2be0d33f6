"""Abstract sigma protocol (P1, challenge, P3, verify, simulate).

The compiler needs P3 to be a classical function of the challenge and the
prover randomness alone. Backends make that concrete with a *selection
layout*: per repetition, the challenge bits pick one row of a table of indices
into ``r``, and the response is just those bits of ``r`` (zero where the index
is -1). :func:`layout_p3` evaluates a layout directly; backends also implement
``p3`` by hand so the two can be checked against each other.

Wire framing::

    alpha  b"SGA1" | backend id u8 | blob payload
    gamma  b"SGG1" | backend id u8 | u32 nbits | packed bits

``gamma`` is ``k`` equal-length slots, one per repetition, in order.
"""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..bits import DecodeError, Reader, as_bits, bits_to_bytes, blob, bytes_to_bits, u16, u32
from ..rng import ensure, random_bits


class SigmaError(ValueError):
    pass


class InvalidWitness(SigmaError):
    pass


class PinConflict(SigmaError):
    pass


class SigmaBackend(ABC):
    name = "abstract"
    backend_id = 0

    def __init__(self, lam: int = 32, k: int = 16):
        if k < 0:
            raise ValueError("repetition count must be non-negative")
        self.lam = lam
        self.k = k

    # sizes
    @abstractmethod
    def randomness_length(self, x: bytes) -> int: ...

    @abstractmethod
    def challenge_length(self, x: bytes) -> int: ...

    @abstractmethod
    def response_length(self, x: bytes) -> int: ...

    # protocol
    @abstractmethod
    def sample_randomness(self, x: bytes, wit: bytes, rng=None) -> np.ndarray: ...

    @abstractmethod
    def p1(self, x: bytes, wit: bytes, r) -> bytes: ...

    @abstractmethod
    def p3(self, x: bytes, beta, r) -> np.ndarray:
        """Response bits; reads only public sizes from ``x``."""

    @abstractmethod
    def p3_layout(self, x: bytes) -> list: ...

    @abstractmethod
    def verify(self, x: bytes, alpha: bytes, beta, gamma) -> bool: ...

    @abstractmethod
    def simulate(self, x: bytes, beta, rng=None) -> tuple[bytes, np.ndarray]: ...

    @abstractmethod
    def check_instance(self, x: bytes) -> None:
        """Raise DecodeError unless ``x`` is a well-formed instance."""

    def challenge(self, x: bytes, rng=None) -> np.ndarray:
        return random_bits(ensure(rng), self.challenge_length(x))

    def challenge_space(self, x: bytes):
        """Every challenge string, in order (small parameters only)."""
        n = self.challenge_length(x)
        for v in range(1 << n):
            yield as_bits([(v >> (n - 1 - j)) & 1 for j in range(n)])

    def descriptor(self) -> bytes:
        return b"SGD1" + bytes([self.backend_id]) + u16(self.lam) + u16(self.k)

    def encode_alpha(self, payload: bytes) -> bytes:
        return b"SGA1" + bytes([self.backend_id]) + blob(payload)

    def decode_alpha(self, alpha: bytes) -> bytes:
        r = Reader(alpha)
        r.expect(b"SGA1")
        if r.u8() != self.backend_id:
            raise DecodeError("alpha belongs to another backend")
        payload = r.blob()
        r.finish()
        return payload

    def encode_gamma(self, gamma) -> bytes:
        gamma = as_bits(gamma)
        return b"SGG1" + bytes([self.backend_id]) + u32(gamma.size) + bits_to_bytes(gamma)

    def decode_gamma(self, data: bytes) -> np.ndarray:
        r = Reader(data)
        r.expect(b"SGG1")
        if r.u8() != self.backend_id:
            raise DecodeError("gamma belongs to another backend")
        n = r.u32()
        bits = bytes_to_bits(r.take(-(-n // 8)))
        r.finish()
        if bits[n:].any():
            raise DecodeError("nonzero padding bits")
        return bits[:n]

    def pin_response(self, x: bytes, r, rep: int, value: int) -> np.ndarray:
        """Randomness whose response on repetition ``rep`` ignores the challenge.

        Every row of that repetition's table is made to output what row
        ``value`` outputs under ``r``. Raises PinConflict if rows share
        randomness in a way that makes this impossible.
        """
        r = as_bits(r).copy()
        src = r.copy()
        _, _, table = self.p3_layout(x)[rep]
        table = np.asarray(table)
        want = np.where(table[value] < 0, 0, src[np.maximum(table[value], 0)])
        fixed: dict[int, int] = {}
        for row in table:
            for pos, idx in enumerate(row.tolist()):
                if idx < 0:
                    if want[pos]:
                        raise PinConflict("a zero slot must carry a one")
                    continue
                if fixed.get(idx, want[pos]) != want[pos]:
                    raise PinConflict("randomness bit needed with two values")
                fixed[idx] = int(want[pos])
        for idx, v in fixed.items():
            r[idx] = v
        return r


def layout_p3(layout, beta, r) -> np.ndarray:
    """Reference evaluation of a selection layout (big-endian challenge bits)."""
    beta, r = as_bits(beta), as_bits(r)
    r_ext = np.concatenate([r, np.zeros(1, np.uint8)])
    out = []
    for offset, nbits, table in layout:
        v = 0
        for j in range(nbits):
            v = (v << 1) | int(beta[offset + j])
        row = np.asarray(table)[v]
        out.append(r_ext[np.where(row < 0, r.size, row)])
    return np.concatenate(out).astype(np.uint8) if out else np.zeros(0, np.uint8)


_REGISTRY: dict[int, type] = {}


def register(cls):
    _REGISTRY[cls.backend_id] = cls
    return cls


def _load_all():
    from .. import cldm  # noqa: F401  (registers itself)
    from . import hamiltonicity  # noqa: F401


def make_backend(name: str, lam: int = 32, k: int | None = None) -> SigmaBackend:
    _load_all()
    for cls in _REGISTRY.values():
        if cls.name == name:
            return cls(lam=lam) if k is None else cls(lam=lam, k=k)
    raise ValueError(f"unknown sigma backend {name!r}")


def backend_from_descriptor(desc: bytes) -> SigmaBackend:
    _load_all()
    r = Reader(desc)
    r.expect(b"SGD1")
    bid = r.u8()
    lam = r.u16()
    k = r.u16()
    r.finish()
    if bid not in _REGISTRY:
        raise DecodeError(f"unknown sigma backend id {bid}")
    return _REGISTRY[bid](lam=lam, k=k)
