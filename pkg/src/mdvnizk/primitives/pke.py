"""Regev-style public-key encryption with pseudorandom public keys.

A key holds ``A`` (SAMPLES x DIM) and ``P = A S + E`` (SAMPLES x L) over
Z_Q, with ``L = lam``. The public key bytes are just those residues as
little-endian u16, so any string of the right length parses as a key
(residues are reduced mod Q on parse).

Encryption is hybrid. A fresh ``lam``-bit session key K is Regev-encrypted
with a binary subset vector ``s``::

    u = s A,   v = s P + K * floor(Q/2)        (mod Q)

and the message is masked by the toy PRF stream keyed by K. The first
``lam`` stream bits form a key-check tag. Errors are bounded by ERR_BOUND, so
for any honestly generated key every subset vector decrypts correctly:
``SAMPLES * ERR_BOUND < Q / 4``.

Ciphertext layout (``CT1``)::

    b"CT1" | u16 L | u32 msg_len | u: DIM x u16 | v: L x u16 | tag: L/8 bytes | body
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bits import (DecodeError, Reader, bits_to_bytes, bytes_to_bits, ints_to_bits, u16, u32)
from ..rng import ensure, random_bits
from .prf import prf_stream, prf_stream_gadget

Q = 3329
DIM = 64
SAMPLES = 64
ERR_BOUND = 4
HALF_Q = Q // 2
COEFF_BITS = 12
DEM_DOMAIN = b"mdvnizk/pke-dem"

assert SAMPLES * ERR_BOUND < Q // 4


class PkeDecodeFailure(DecodeError):
    """Ciphertext is malformed or fails its key-check tag."""


def pk_length(lam: int) -> int:
    """Byte length of a public key for security parameter ``lam``."""
    return 2 * SAMPLES * (DIM + lam)


@dataclass(frozen=True, eq=False)
class PublicKey:
    A: np.ndarray
    P: np.ndarray

    @property
    def lam(self) -> int:
        return int(self.P.shape[1])

    def to_bytes(self) -> bytes:
        return np.concatenate([self.A, self.P], axis=1).astype("<u2").tobytes()

    @classmethod
    def parse(cls, data: bytes) -> "PublicKey":
        data = bytes(data)
        if len(data) % (2 * SAMPLES):
            raise DecodeError("public key length is not a whole number of rows")
        cols = len(data) // (2 * SAMPLES)
        lam = cols - DIM
        if lam < 8 or lam % 8:
            raise DecodeError("public key has an invalid slot count")
        mat = np.frombuffer(data, dtype="<u2").astype(np.int64).reshape(SAMPLES, cols) % Q
        return cls(mat[:, :DIM], mat[:, DIM:])


@dataclass(frozen=True, eq=False)
class SecretKey:
    S: np.ndarray

    @property
    def lam(self) -> int:
        return int(self.S.shape[1])

    def to_bytes(self) -> bytes:
        return b"SK1" + u16(self.lam) + self.S.astype("<u2").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SecretKey":
        r = Reader(data)
        r.expect(b"SK1")
        lam = r.u16()
        S = np.frombuffer(r.take(2 * DIM * lam), dtype="<u2").astype(np.int64).reshape(DIM, lam)
        r.finish()
        return cls(S)


@dataclass(frozen=True)
class PkeKeypair:
    pk: bytes
    sk: SecretKey


@dataclass(frozen=True, eq=False)
class PkeCoins:
    """Encryption randomness: subset vector and session key."""
    subset: np.ndarray
    session: np.ndarray

    def bits(self) -> np.ndarray:
        return np.concatenate([self.subset, self.session]).astype(np.uint8)

    @classmethod
    def sample(cls, lam: int, rng=None) -> "PkeCoins":
        rng = ensure(rng)
        return cls(random_bits(rng, SAMPLES), random_bits(rng, lam))


def pk_to_bytes_tagged(pk: bytes) -> bytes:
    return b"PK1" + u32(len(pk)) + pk


def pk_from_bytes_tagged(data: bytes) -> bytes:
    r = Reader(data)
    r.expect(b"PK1")
    pk = r.take(r.u32())
    r.finish()
    PublicKey.parse(pk)
    return pk


def pke_gen(lam: int, rng: np.random.Generator | None = None) -> PkeKeypair:
    if lam < 16 or lam % 8:
        raise ValueError("security parameter must be a multiple of 8 and at least 16")
    rng = ensure(rng)
    A = rng.integers(0, Q, size=(SAMPLES, DIM), dtype=np.int64)
    S = rng.integers(0, Q, size=(DIM, lam), dtype=np.int64)
    E = rng.integers(-ERR_BOUND, ERR_BOUND + 1, size=(SAMPLES, lam), dtype=np.int64)
    P = (A @ S + E) % Q
    return PkeKeypair(PublicKey(A, P).to_bytes(), SecretKey(S))


def pke_enc(pk: bytes, m: bytes, rng: np.random.Generator | None = None, coins: PkeCoins | None = None) -> bytes:
    key = PublicKey.parse(pk)
    if coins is None:
        coins = PkeCoins.sample(key.lam, rng)
    s = coins.subset.astype(np.int64)
    k = coins.session.astype(np.int64)
    if s.size != SAMPLES or k.size != key.lam:
        raise ValueError("coins do not match the key dimensions")
    u = (s @ key.A) % Q
    v = (s @ key.P + k * HALF_Q) % Q
    stream = prf_stream(coins.session, DEM_DOMAIN, key.lam + 8 * len(m))
    tag = stream[:key.lam]
    body = np.frombuffer(m, np.uint8) ^ np.packbits(stream[key.lam:]) if m else np.zeros(0, np.uint8)
    return (b"CT1" + u16(key.lam) + u32(len(m)) + u.astype("<u2").tobytes()
            + v.astype("<u2").tobytes() + bits_to_bytes(tag) + bytes(body))


@dataclass(frozen=True, eq=False)
class ParsedCiphertext:
    u: np.ndarray
    v: np.ndarray
    tag: np.ndarray
    body: bytes

    @property
    def lam(self) -> int:
        return int(self.v.size)

    def bit_view(self) -> np.ndarray:
        """Field bits in the order the encryption circuit emits them."""
        return np.concatenate([ints_to_bits(self.u, COEFF_BITS), ints_to_bits(self.v, COEFF_BITS),
                               self.tag, bytes_to_bits(self.body)]).astype(np.uint8)


def parse_ciphertext(ct: bytes) -> ParsedCiphertext:
    r = Reader(ct)
    r.expect(b"CT1")
    lam = r.u16()
    n = r.u32()
    if lam % 8 or lam == 0:
        raise DecodeError("bad slot count")
    u = np.frombuffer(r.take(2 * DIM), "<u2").astype(np.int64)
    v = np.frombuffer(r.take(2 * lam), "<u2").astype(np.int64)
    if (u >= Q).any() or (v >= Q).any():
        raise DecodeError("residue out of range")
    tag = bytes_to_bits(r.take(lam // 8))
    body = r.take(n)
    r.finish()
    return ParsedCiphertext(u, v, tag, body)


def ciphertext_length(lam: int, msg_len: int) -> int:
    return 3 + 2 + 4 + 2 * DIM + 2 * lam + lam // 8 + msg_len


def pke_dec(sk: SecretKey, ct: bytes) -> bytes:
    try:
        parsed = parse_ciphertext(ct)
    except DecodeError as exc:
        raise PkeDecodeFailure(str(exc)) from exc
    if parsed.lam != sk.lam:
        raise PkeDecodeFailure("ciphertext and key dimensions differ")
    d = (parsed.v - parsed.u @ sk.S) % Q
    session = ((d > Q // 4) & (d < 3 * Q // 4)).astype(np.uint8)
    stream = prf_stream(session, DEM_DOMAIN, sk.lam + 8 * len(parsed.body))
    if not np.array_equal(stream[:sk.lam], parsed.tag):
        raise PkeDecodeFailure("key-check tag mismatch")
    if not parsed.body:
        return b""
    return bytes(np.frombuffer(parsed.body, np.uint8) ^ np.packbits(stream[sk.lam:]))


# -- circuit gadget ------------------------------------------------------------

def _add(bld, acc: np.ndarray, term: np.ndarray) -> np.ndarray:
    """Ripple-carry add of (C, width) reference arrays, big-endian bits."""
    width = acc.shape[1]
    out = np.empty_like(acc)
    carry = np.full(acc.shape[0], -1, np.int64)
    for pos in range(width - 1, -1, -1):
        x, y = acc[:, pos], term[:, pos]
        out[:, pos] = bld.xor(bld.xor(x, y), carry)
        carry = bld.xor(carry, bld.and_(bld.xor(x, carry), bld.xor(y, carry)))
    return out


def _reduce(bld, acc: np.ndarray, max_value: int) -> np.ndarray:
    width = acc.shape[1]
    j = 0
    while (Q << (j + 1)) <= max_value:
        j += 1
    for shift in range(j, -1, -1):
        c = Q << shift
        if c > max_value:
            continue
        cbits = bld.const(ints_to_bits([c], width))
        diff = np.empty_like(acc)
        borrow = np.full(acc.shape[0], -1, np.int64)
        for pos in range(width - 1, -1, -1):
            x = acc[:, pos]
            y = np.full(acc.shape[0], cbits[pos])
            diff[:, pos] = bld.xor(bld.xor(x, y), borrow)
            borrow = bld.xor(bld.and_(bld.xor(bld.not_(x), borrow), bld.xor(y, borrow)), borrow)
        acc = np.stack([bld.mux(borrow, diff[:, p], acc[:, p]) for p in range(width)], axis=1)
    return acc[:, width - COEFF_BITS:]


def _subset_sum_mod_q(bld, terms) -> np.ndarray:
    """Sum of ``sel * const`` terms mod Q, per coordinate; returns (C, 12) refs."""
    max_value = int(sum(np.asarray(c) for _, c in terms).max())
    width = max(COEFF_BITS, max_value.bit_length())
    C = len(terms[0][1])
    acc = np.full((C, width), -1, np.int64)
    for sel, const in terms:
        cb = ints_to_bits(const, width).reshape(C, width).astype(bool)
        term = np.where(cb, np.asarray(sel, np.int64).reshape(C, 1), -1)
        acc = _add(bld, acc, term)
    return _reduce(bld, acc, max_value)


def pke_enc_gadget(bld, pk: bytes, msg_refs: np.ndarray, subset_refs: np.ndarray, session_refs: np.ndarray) -> np.ndarray:
    """Circuit mirror of :func:`pke_enc`; output bits follow ``ParsedCiphertext.bit_view``."""
    key = PublicKey.parse(pk)
    lam = key.lam
    msg_refs = np.asarray(msg_refs, np.int64)
    if msg_refs.size % 8:
        raise ValueError("message must be whole bytes")
    consts = np.concatenate([key.A, key.P], axis=1)
    terms = [(np.full(DIM + lam, subset_refs[i]), consts[i]) for i in range(SAMPLES)]
    sel = np.concatenate([np.full(DIM, -1, np.int64), np.asarray(session_refs, np.int64)])
    terms.append((sel, np.concatenate([np.zeros(DIM, np.int64), np.full(lam, HALF_Q)])))
    coeffs = _subset_sum_mod_q(bld, terms)
    stream = prf_stream_gadget(bld, session_refs, DEM_DOMAIN, lam + msg_refs.size)
    body = bld.xor(msg_refs, stream[lam:])
    return np.concatenate([coeffs.ravel(), stream[:lam], body])
