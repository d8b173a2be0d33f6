"""The two NP relations of the compiled protocol, as circuits.

Both relations say "these public ciphertexts were produced honestly from some
randomness". Each one becomes a circuit ``C`` plus an expected output ``y``
read off the statement; the statement holds iff some witness ``w`` gives
``C(w) = y``. Header fields that do not depend on the witness (magic bytes,
lengths, backend ids) are checked in the clear while the statement is parsed.

REL_V (0x01), public ``(c_V, c_rV, ek)``, witness segments::

    P prfk (lam) | F fhe key seed (lam) | E encryption nonce (lam) | C pke coins (64 + lam)

with ``c_V = fhe_enc(fhek, prfk; nonce)`` and ``c_rV = pke_enc(ek, r_V; coins)``
where ``r_V = b"RV1" b"P" prfk b"F" fhek b"E" nonce`` (keys packed to bytes).

REL_P (0x02), public ``(x, sigma descriptor, c_V, evc_P, c_rX, ek)``, witness::

    R prover randomness r | N evaluation nonce (lam) | C pke coins (64 + lam)

with ``evc_P = fhe_eval(C_{x,r}, c_V; nonce)`` and ``c_rX = pke_enc(ek, pack(r); coins)``.
Only the transparent FHE backend is supported here: the PRF key inside
``c_V`` is then readable from the statement, so the instance challenge is a
constant and the response function reduces to wiring.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import fhe
from ..bits import DecodeError, Reader, as_bits, bits_to_bytes, blob, bytes_to_bits, u32
from ..circuits import DEFAULT_SIZE_BOUND, Circuit, CircuitBuilder, UnsupportedBackend, eval_circuit, p3_gadget
from ..primitives import pke
from ..primitives.prf import prf_stream, prf_stream_gadget
from ..sigma.base import backend_from_descriptor

REL_V = 0x01
REL_P = 0x02
RELATIONS = (REL_V, REL_P)


class UnknownRelation(ValueError):
    pass


@dataclass(frozen=True)
class Statement:
    rel: int
    parts: tuple

    def to_bytes(self) -> bytes:
        return bytes([self.rel]) + b"".join(blob(p) for p in self.parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Statement":
        r = Reader(data)
        rel = r.u8()
        if rel not in RELATIONS:
            raise UnknownRelation(f"unknown relation id {rel}")
        n = 3 if rel == REL_V else 6
        parts = tuple(r.blob() for _ in range(n))
        r.finish()
        return cls(rel, parts)


def rel_v_statement(c_v: bytes, c_rv: bytes, ek: bytes) -> Statement:
    return Statement(REL_V, (c_v, c_rv, ek))


def rel_p_statement(x: bytes, desc: bytes, c_v: bytes, evc_p: bytes, c_rx: bytes, ek: bytes) -> Statement:
    return Statement(REL_P, (x, desc, c_v, evc_p, c_rx, ek))


@dataclass(frozen=True, eq=False)
class Witness:
    rel: int
    segments: tuple  # ((tag, bits), ...)

    def bits(self) -> np.ndarray:
        return np.concatenate([as_bits(b) for _, b in self.segments]).astype(np.uint8)

    def segment(self, tag: bytes) -> np.ndarray:
        for t, b in self.segments:
            if t == tag:
                return as_bits(b)
        raise KeyError(tag)

    def to_bytes(self) -> bytes:
        out = [b"WIT1", bytes([self.rel, len(self.segments)])]
        for tag, b in self.segments:
            b = as_bits(b)
            out += [tag, u32(b.size), bits_to_bytes(b)]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Witness":
        r = Reader(data)
        r.expect(b"WIT1")
        rel = r.u8()
        segs = []
        for _ in range(r.u8()):
            tag = r.take(1)
            n = r.u32()
            segs.append((tag, bytes_to_bits(r.take(-(-n // 8)), n)))
        r.finish()
        return cls(rel, tuple(segs))


def rel_v_witness(prfk, fhek_seed, nonce, coins: pke.PkeCoins) -> Witness:
    return Witness(REL_V, ((b"P", as_bits(prfk)), (b"F", as_bits(fhek_seed)), (b"E", as_bits(nonce)),
                           (b"C", coins.bits())))


def rel_p_witness(r, nonce, coins: pke.PkeCoins) -> Witness:
    return Witness(REL_P, ((b"R", as_bits(r)), (b"N", as_bits(nonce)), (b"C", coins.bits())))


def encode_rv(prfk, fhek_seed, nonce) -> bytes:
    return (b"RV1" + b"P" + bits_to_bytes(prfk) + b"F" + bits_to_bytes(fhek_seed)
            + b"E" + bits_to_bytes(nonce))


def decode_rv(data: bytes, lam: int):
    r = Reader(data)
    r.expect(b"RV1")
    out = []
    for tag in (b"P", b"F", b"E"):
        r.expect(tag)
        out.append(bytes_to_bits(r.take(lam // 8)))
    r.finish()
    return tuple(out)


def rv_length(lam: int) -> int:
    return 6 + 3 * (lam // 8)


def pack_randomness(r) -> bytes:
    return bits_to_bytes(as_bits(r))


# -- circuits ---------------------------------------------------------------------

@lru_cache(maxsize=8)
def pke_circuit(ek: bytes, msg_bits: int) -> Circuit:
    """Encryption under ``ek``: inputs message | subset | session, output the ciphertext bit view."""
    lam = pke.PublicKey.parse(ek).lam
    bld = CircuitBuilder(msg_bits + pke.SAMPLES + lam)
    w = bld.input_wires()
    out = pke.pke_enc_gadget(bld, ek, w[:msg_bits], w[msg_bits:msg_bits + pke.SAMPLES], w[msg_bits + pke.SAMPLES:])
    return bld.build(out)


@dataclass(frozen=True, eq=False)
class Relation:
    circuit: Circuit
    expected: np.ndarray
    segments: tuple  # ((tag, nbits), ...) in circuit-input order


def _pke_expected(ct: bytes, lam: int, msg_len: int) -> np.ndarray:
    parsed = pke.parse_ciphertext(ct)
    if parsed.lam != lam or len(parsed.body) != msg_len:
        raise DecodeError("encryption of the randomness has the wrong shape")
    return parsed.bit_view()


def _fhe_ct(data: bytes, lam: int) -> fhe.FheCiphertext:
    ct = fhe.FheCiphertext.from_bytes(data)
    if ct.backend != fhe.TRANSPARENT:
        raise UnsupportedBackend("the NP relations cover the transparent FHE backend only")
    if ct.lam != lam or ct.size_bound != DEFAULT_SIZE_BOUND:
        raise DecodeError("ciphertext parameters do not match the key")
    return ct


@lru_cache(maxsize=4)
def _rel_v_circuit(ek: bytes) -> Circuit:
    lam = pke.PublicKey.parse(ek).lam
    bld = CircuitBuilder(3 * lam + pke.SAMPLES + lam)
    w = bld.input_wires()
    prfk, seed, nonce = w[:lam], w[lam:2 * lam], w[2 * lam:3 * lam]
    coins = w[3 * lam:]
    fp = prf_stream_gadget(bld, seed, fhe.FINGERPRINT_DOMAIN, lam)

    def tag(t: bytes):
        return CircuitBuilder.const(bytes_to_bits(t))

    msg = np.concatenate([tag(b"RV1P"), prfk, tag(b"F"), seed, tag(b"E"), nonce])
    ct = bld.embed(pke_circuit(ek, msg.size), np.concatenate([msg, coins]))
    return bld.build(np.concatenate([fp, nonce, prfk, ct]))


def rel_v_relation(stmt: Statement) -> Relation:
    c_v, c_rv, ek = stmt.parts
    lam = pke.PublicKey.parse(ek).lam
    ct = _fhe_ct(c_v, lam)
    view = fhe.parse_transparent(ct)
    if not view.fresh or ct.arity != lam:
        raise DecodeError("c_V must be a fresh encryption of a lam-bit key")
    expected = np.concatenate([view.bit_view(), _pke_expected(c_rv, lam, rv_length(lam))])
    segs = ((b"P", lam), (b"F", lam), (b"E", lam), (b"C", pke.SAMPLES + lam))
    return Relation(_rel_v_circuit(bytes(ek)), expected, segs)


def instance_challenge(prfk_bits, x: bytes, backend) -> np.ndarray:
    """beta_x: the first challenge_length bits of the PRF stream on x."""
    return prf_stream(prfk_bits, x, backend.challenge_length(x))


def rel_p_relation(stmt: Statement) -> Relation:
    x, desc, c_v, evc_p, c_rx, ek = stmt.parts
    lam = pke.PublicKey.parse(ek).lam
    backend = backend_from_descriptor(desc)
    if backend.lam != lam:
        raise DecodeError("sigma backend and key disagree on lam")
    backend.check_instance(x)
    view_v = fhe.parse_transparent(_fhe_ct(c_v, lam))
    if not view_v.fresh or view_v.plaintext.size != lam:
        raise DecodeError("c_V must be a fresh encryption of a lam-bit key")
    beta = instance_challenge(view_v.plaintext, x, backend)
    ev = _fhe_ct(evc_p, lam)
    view_p = fhe.parse_transparent(ev)
    n_r = backend.randomness_length(x)
    if view_p.fresh or ev.arity != backend.response_length(x):
        raise DecodeError("evc_P must be an evaluated ciphertext of a full response")
    msg_bits = 8 * (-(-n_r // 8))
    expected = np.concatenate([view_p.bit_view(), _pke_expected(c_rx, lam, msg_bits // 8)])

    bld = CircuitBuilder(n_r + lam + pke.SAMPLES + lam)
    w = bld.input_wires()
    r, nonce, coins = w[:n_r], w[n_r:n_r + lam], w[n_r + lam:]
    gamma = p3_gadget(bld, CircuitBuilder.const(beta), r, backend.p3_layout(x))
    msg = np.concatenate([r, np.full(msg_bits - n_r, -1, np.int64)])
    ct = bld.embed(pke_circuit(bytes(ek), msg_bits), np.concatenate([msg, coins]))
    circuit = bld.build(np.concatenate([nonce, gamma, ct]))
    segs = ((b"R", n_r), (b"N", lam), (b"C", pke.SAMPLES + lam))
    return Relation(circuit, expected, segs)


def relation_for(stmt: Statement) -> Relation:
    if stmt.rel == REL_V:
        return rel_v_relation(stmt)
    if stmt.rel == REL_P:
        return rel_p_relation(stmt)
    raise UnknownRelation(f"unknown relation id {stmt.rel}")


def witness_bits(rel: Relation, wit: Witness) -> np.ndarray | None:
    """Witness bits in circuit-input order, or None if the segments do not fit."""
    if len(wit.segments) != len(rel.segments):
        return None
    for (tag, bits), (want_tag, n) in zip(wit.segments, rel.segments):
        if tag != want_tag or as_bits(bits).size != n:
            return None
    return wit.bits()


def relation_check(stmt: Statement, wit: Witness) -> bool:
    if stmt.rel not in RELATIONS:
        raise UnknownRelation(f"unknown relation id {stmt.rel}")
    if wit.rel != stmt.rel:
        return False
    try:
        rel = relation_for(stmt)
    except (DecodeError, ValueError):
        return False
    w = witness_bits(rel, wit)
    if w is None:
        return False
    return bool(np.array_equal(eval_circuit(rel.circuit, w), rel.expected))
