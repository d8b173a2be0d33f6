"""Leveled FHE with statistical circuit privacy.

Two backends share one interface:

``transparent`` (id 1)
    Insecure by design. Ciphertexts carry the plaintext in the clear next to
    fresh randomness. Evaluation extracts, computes the circuit in the clear
    and emits a fresh ciphertext of the result, so evaluated ciphertexts depend
    only on the output: circuit privacy and the agreeing-circuits property hold
    exactly. Fresh ciphertexts also carry a key fingerprint so decryption under
    the wrong key is detected. It gives no input privacy at all; use it only to
    test protocol logic.

``lattice`` (id 2)
    A small GSW scheme over Z_{2^64} with a binary secret of dimension 4.
    Correct for shallow circuits. Circuit privacy is approximated by flooding
    the output noise with at least 2**40 times the tracked evaluation noise.

Serialization::

    key  b"FHK1" | backend u8 | lam u16 | size_bound u32 | blob material
    ct   b"FHC1" | backend u8 | lam u16 | size_bound u32 | arity u32 | blob payload

Transparent payloads::

    fresh      0x00 | fingerprint lam/8 | nonce lam/8 | packed plaintext
    evaluated  0x01 | nonce lam/8 | packed plaintext
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import DecodeError, Reader, as_bits, bits_to_bytes, blob, bytes_to_bits, u16, u32
from .circuits import DEFAULT_SIZE_BOUND, Circuit, eval_circuit
from .kernels import OP_AND, OP_CONST1, OP_NOT, OP_XOR
from .primitives.prf import prf_stream
from .rng import ensure, random_bits

TRANSPARENT = "transparent"
LATTICE = "lattice"
_IDS = {TRANSPARENT: 1, LATTICE: 2}
_NAMES = {v: k for k, v in _IDS.items()}

FINGERPRINT_DOMAIN = b"mdvnizk/fhe-fingerprint"
FRESH = 0x00
EVALUATED = 0x01


class FheError(ValueError):
    pass


class LevelExceeded(FheError):
    pass


class FheDecodeFailure(FheError):
    pass


class ExtractFailure(FheError):
    pass


@dataclass(frozen=True, eq=False)
class FheSecretKey:
    backend: str
    lam: int
    size_bound: int
    material: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, FheSecretKey) and self.backend == other.backend and self.lam == other.lam
                and self.size_bound == other.size_bound and np.array_equal(self.material, other.material))

    __hash__ = None

    def to_bytes(self) -> bytes:
        return (b"FHK1" + bytes([_IDS[self.backend]]) + u16(self.lam) + u32(self.size_bound)
                + blob(bits_to_bytes(self.material)))

    @classmethod
    def from_bytes(cls, data: bytes) -> "FheSecretKey":
        r = Reader(data)
        r.expect(b"FHK1")
        backend = _backend_name(r.u8())
        lam = r.u16()
        bound = r.u32()
        nbits = lam if backend == TRANSPARENT else GSW_DIM
        material = bytes_to_bits(r.blob(), nbits)
        r.finish()
        return cls(backend, lam, bound, material)


@dataclass(frozen=True)
class FheCiphertext:
    backend: str
    lam: int
    size_bound: int
    arity: int
    payload: bytes

    def to_bytes(self) -> bytes:
        return (b"FHC1" + bytes([_IDS[self.backend]]) + u16(self.lam) + u32(self.size_bound)
                + u32(self.arity) + blob(self.payload))

    @classmethod
    def from_bytes(cls, data: bytes) -> "FheCiphertext":
        r = Reader(data)
        r.expect(b"FHC1")
        backend = _backend_name(r.u8())
        lam = r.u16()
        bound = r.u32()
        arity = r.u32()
        payload = r.blob()
        r.finish()
        return cls(backend, lam, bound, arity, payload)


def _backend_name(i: int) -> str:
    if i not in _NAMES:
        raise DecodeError(f"unknown FHE backend id {i}")
    return _NAMES[i]


def fhe_gen(lam: int, size_bound: int = DEFAULT_SIZE_BOUND, backend: str = TRANSPARENT,
            rng: np.random.Generator | None = None, seed_bits=None) -> FheSecretKey:
    """Sample a key; ``seed_bits`` fixes the transparent key material (for re-derivation)."""
    if size_bound < 1:
        raise ValueError("circuit size bound must be positive")
    if lam % 8 or lam < 8:
        raise ValueError("security parameter must be a positive multiple of 8")
    rng = ensure(rng)
    if backend == TRANSPARENT:
        material = as_bits(seed_bits) if seed_bits is not None else random_bits(rng, lam)
        if material.size != lam:
            raise ValueError("seed must have lam bits")
        return FheSecretKey(TRANSPARENT, lam, size_bound, material)
    if backend == LATTICE:
        return FheSecretKey(LATTICE, lam, size_bound, random_bits(rng, GSW_DIM))
    raise FheError(f"unknown FHE backend {backend!r}")


def fingerprint(sk: FheSecretKey) -> np.ndarray:
    return prf_stream(sk.material, FINGERPRINT_DOMAIN, sk.lam)


def fhe_enc(sk: FheSecretKey, x, rng: np.random.Generator | None = None, nonce=None) -> FheCiphertext:
    x = as_bits(x)
    rng = ensure(rng)
    if sk.backend == TRANSPARENT:
        nonce = as_bits(nonce) if nonce is not None else random_bits(rng, sk.lam)
        payload = (bytes([FRESH]) + bits_to_bytes(fingerprint(sk)) + bits_to_bytes(nonce) + bits_to_bytes(x))
        return FheCiphertext(TRANSPARENT, sk.lam, sk.size_bound, int(x.size), payload)
    mats = [_gsw_encrypt(sk.material, int(b), FRESH_NOISE, rng) for b in x]
    return FheCiphertext(LATTICE, sk.lam, sk.size_bound, int(x.size), _gsw_pack(mats, FRESH_NOISE))


def fhe_dec(sk: FheSecretKey, ct: FheCiphertext) -> np.ndarray:
    if ct.backend != sk.backend:
        raise FheError(f"ciphertext is {ct.backend}, key is {sk.backend}")
    if ct.backend == TRANSPARENT:
        view = parse_transparent(ct)
        if view.fresh and not np.array_equal(view.fingerprint, fingerprint(sk)):
            raise FheDecodeFailure("ciphertext was not produced under this key")
        return view.plaintext
    mats, _ = _gsw_unpack(ct)
    return np.array([_gsw_decrypt(sk.material, m) for m in mats], dtype=np.uint8)


def fhe_eval(c: Circuit, ct: FheCiphertext, rng: np.random.Generator | None = None, nonce=None) -> FheCiphertext:
    """Homomorphic evaluation; ``nonce`` fixes the transparent backend's output randomness."""
    if c.inputs != ct.arity:
        raise FheError(f"circuit takes {c.inputs} inputs, ciphertext holds {ct.arity} bits")
    if c.n_gates > ct.size_bound:
        raise LevelExceeded(f"circuit has {c.n_gates} gates, bound is {ct.size_bound}")
    rng = ensure(rng)
    if ct.backend == TRANSPARENT:
        y = eval_circuit(c, parse_transparent(ct).plaintext)
        nonce = as_bits(nonce) if nonce is not None else random_bits(rng, ct.lam)
        return _transparent_evaluated(ct.lam, ct.size_bound, y, nonce)
    return _gsw_eval(c, ct, rng)


def fhe_sim(lam: int, y, backend: str = TRANSPARENT, size_bound: int = DEFAULT_SIZE_BOUND,
            rng: np.random.Generator | None = None) -> FheCiphertext:
    y = as_bits(y)
    rng = ensure(rng)
    if backend == TRANSPARENT:
        return _transparent_evaluated(lam, size_bound, y, random_bits(rng, lam))
    if backend == LATTICE:
        s = random_bits(rng, GSW_DIM)
        noise = FLOOD_FACTOR * FRESH_NOISE
        mats = [_gsw_encrypt(s, int(b), noise, rng) for b in y]
        return FheCiphertext(LATTICE, lam, size_bound, int(y.size), _gsw_pack(mats, noise))
    raise FheError(f"unknown FHE backend {backend!r}")


def fhe_extract(ct: FheCiphertext) -> np.ndarray:
    """The plaintext of any ciphertext in the support of encryption.

    Transparent: decryption without the key check. Lattice: exhaustive search
    over all binary secrets, standing in for an unbounded extractor.
    """
    if ct.backend == TRANSPARENT:
        try:
            return parse_transparent(ct).plaintext
        except DecodeError as exc:
            raise ExtractFailure(str(exc)) from exc
    try:
        mats, _ = _gsw_unpack(ct)
    except DecodeError as exc:
        raise ExtractFailure(str(exc)) from exc
    for code in range(1 << GSW_DIM):
        s = np.array([(code >> i) & 1 for i in range(GSW_DIM)], dtype=np.uint8)
        bits = []
        for m in mats:
            b = _gsw_consistent_bit(s, m)
            if b is None:
                break
            bits.append(b)
        else:
            return np.array(bits, dtype=np.uint8)
    raise ExtractFailure("no binary secret explains this ciphertext")


# -- transparent backend -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransparentView:
    fresh: bool
    fingerprint: np.ndarray | None
    nonce: np.ndarray
    plaintext: np.ndarray

    def bit_view(self) -> np.ndarray:
        """Fields in circuit order: [fingerprint], nonce, plaintext."""
        parts = ([self.fingerprint] if self.fresh else []) + [self.nonce, self.plaintext]
        return np.concatenate(parts).astype(np.uint8)


def parse_transparent(ct: FheCiphertext) -> TransparentView:
    if ct.backend != TRANSPARENT:
        raise DecodeError("not a transparent ciphertext")
    r = Reader(ct.payload)
    kind = r.u8()
    nb = ct.lam // 8
    if kind == FRESH:
        fp = bytes_to_bits(r.take(nb))
    elif kind == EVALUATED:
        fp = None
    else:
        raise DecodeError("unknown transparent ciphertext kind")
    nonce = bytes_to_bits(r.take(nb))
    packed = r.take(-(-ct.arity // 8))
    r.finish()
    bits = bytes_to_bits(packed)
    if bits[ct.arity:].any():
        raise DecodeError("nonzero padding bits")
    return TransparentView(kind == FRESH, fp, nonce, bits[:ct.arity])


def _transparent_evaluated(lam, size_bound, y, nonce) -> FheCiphertext:
    payload = bytes([EVALUATED]) + bits_to_bytes(nonce) + bits_to_bytes(y)
    return FheCiphertext(TRANSPARENT, lam, size_bound, int(y.size), payload)


def transparent_evaluated(lam: int, size_bound: int, y, nonce) -> FheCiphertext:
    """Evaluated-form ciphertext with explicit randomness (used by the NP relations)."""
    return _transparent_evaluated(lam, size_bound, as_bits(y), as_bits(nonce))


# -- lattice (GSW) backend --------------------------------------------------------------

GSW_DIM = 4
GSW_LOG_Q = 64
GSW_N = (GSW_DIM + 1) * GSW_LOG_Q
FRESH_NOISE = 4
FLOOD_FACTOR = 1 << 40
NOISE_LIMIT = 1 << 61
_ROW = GSW_DIM * GSW_LOG_Q + (GSW_LOG_Q - 2)

_G = np.zeros((GSW_N, GSW_DIM + 1), dtype=np.uint64)
for _i in range(GSW_DIM + 1):
    for _j in range(GSW_LOG_Q):
        _G[_i * GSW_LOG_Q + _j, _i] = np.uint64(1) << np.uint64(_j)


def _small(rng, bound: int, shape) -> np.ndarray:
    return rng.integers(-bound, bound + 1, size=shape, dtype=np.int64).astype(np.uint64)


def _gsw_encrypt(s, mu: int, noise: int, rng) -> np.ndarray:
    A = rng.integers(0, np.iinfo(np.uint64).max, size=(GSW_N, GSW_DIM), dtype=np.uint64, endpoint=True)
    e = _small(rng, noise, GSW_N)
    b = (A @ np.asarray(s, dtype=np.uint64)) + e
    C = np.concatenate([A, b[:, None]], axis=1)
    return C + _G if mu else C


def _phase(s, C: np.ndarray) -> np.ndarray:
    """C t with t = (-s, 1), computed mod 2^64."""
    return C[:, GSW_DIM] - C[:, :GSW_DIM] @ np.asarray(s, dtype=np.uint64)


def _gsw_decrypt(s, C: np.ndarray) -> int:
    val = int(_phase(s, C)[_ROW])
    return (((val + (1 << 61)) % (1 << 64)) >> 62) & 1


def _gsw_consistent_bit(s, C: np.ndarray):
    ph = _phase(s, C)
    Gt = _G @ np.append(-np.asarray(s, dtype=np.int64), 1).astype(np.uint64)
    for mu in (0, 1):
        e = (ph - Gt * np.uint64(mu)).astype(np.int64)
        if np.all(np.abs(e) < NOISE_LIMIT):
            return mu
    return None


def _g_inverse(C: np.ndarray) -> np.ndarray:
    shifts = np.arange(GSW_LOG_Q, dtype=np.uint64)
    bits = (C[:, :, None] >> shifts) & np.uint64(1)
    return bits.reshape(C.shape[0], -1)


def _gsw_mul(C1, C2):
    return _g_inverse(C1) @ C2


def _gsw_pack(mats, noise: int) -> bytes:
    body = b"".join(m.astype("<u8").tobytes() for m in mats)
    return int(noise).to_bytes(8, "little") + body


def _gsw_unpack(ct: FheCiphertext):
    r = Reader(ct.payload)
    noise = int.from_bytes(r.take(8), "little")
    size = GSW_N * (GSW_DIM + 1) * 8
    mats = [np.frombuffer(r.take(size), "<u8").astype(np.uint64).reshape(GSW_N, GSW_DIM + 1)
            for _ in range(ct.arity)]
    r.finish()
    return mats, noise


def gsw_noise_bounds(c: Circuit, input_noise: int) -> tuple[int, int]:
    """(worst-case evaluation noise, flooding bound) for evaluating ``c``."""
    bound = [input_noise] * c.inputs
    for op, x, y in zip(c.ops.tolist(), c.a.tolist(), c.b.tolist()):
        if op == OP_AND:
            v = GSW_N * bound[y] + bound[x]
        elif op == OP_XOR:
            v = bound[x] + bound[y] + 2 * (GSW_N * bound[y] + bound[x])
        elif op == OP_NOT:
            v = bound[x]
        else:
            v = 0
        bound.append(v)
    worst = max((bound[w] for w in c.outputs.tolist()), default=0)
    return worst, FLOOD_FACTOR * max(worst, 1)


def _gsw_eval(c: Circuit, ct: FheCiphertext, rng) -> FheCiphertext:
    mats, noise = _gsw_unpack(ct)
    worst, flood = gsw_noise_bounds(c, noise)
    if worst + flood >= NOISE_LIMIT:
        raise LevelExceeded("noise budget exhausted for this circuit depth")
    zero = np.zeros((GSW_N, GSW_DIM + 1), dtype=np.uint64)
    wires = list(mats)
    for op, x, y in zip(c.ops.tolist(), c.a.tolist(), c.b.tolist()):
        if op == OP_AND:
            v = _gsw_mul(wires[x], wires[y])
        elif op == OP_XOR:
            v = wires[x] + wires[y] - np.uint64(2) * _gsw_mul(wires[x], wires[y])
        elif op == OP_NOT:
            v = _G - wires[x]
        elif op == OP_CONST1:
            v = _G.copy()
        else:
            v = zero
        wires.append(v)
    out = []
    for w in c.outputs.tolist():
        m = wires[w].copy()
        m[:, GSW_DIM] += _small(rng, flood, GSW_N)
        out.append(m)
    return FheCiphertext(LATTICE, ct.lam, ct.size_bound, c.n_outputs, _gsw_pack(out, worst + flood))
