"""The compiled designated-verifier protocol and its zero-knowledge simulator.

Wire formats (all fields are u32-length-prefixed blobs)::

    Crs         b"CRS1" | nizk crs (NCR1) | ek
    PublicVerKey b"PVK1" | c_V (FHC1) | c_rV (CT1) | pi_V (NZK1)
    SecretVerKey b"SVK1" | prfk (PRF1) | fhek (FHK1)
    QmaProof    b"QMP1" | alpha (SGA1) | evc_P (FHC1) | c_rX (CT1) | pi_P (NZK1)

The verifier checks pi_P against the statement built from its own pvk, so
``verify`` takes the pvk alongside the svk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fhe
from .bits import DecodeError, Reader, as_bits, blob
from .circuits import DEFAULT_SIZE_BOUND, build_const_circuit, build_prover_circuit
from .nizk import (MPCITH, NizkCrs, Trapdoor as NizkTrapdoor, nizk_prove, nizk_setup,
                   nizk_sim_prove, nizk_sim_setup, nizk_verify)
from .nizk.relations import (decode_rv, encode_rv, instance_challenge, pack_randomness, rel_p_statement,
                             rel_p_witness, rel_v_statement, rel_v_witness, relation_for)
from .primitives import pke
from .primitives.prf import PrfKey
from .rng import child, ensure, random_bits


def _read_blobs(data: bytes, magic: bytes, n: int) -> list[bytes]:
    r = Reader(data)
    r.expect(magic)
    out = [r.blob() for _ in range(n)]
    r.finish()
    return out


@dataclass(frozen=True, eq=False)
class Crs:
    nizk: NizkCrs
    ek: bytes

    @property
    def lam(self) -> int:
        return self.nizk.lam

    def __eq__(self, other):
        return isinstance(other, Crs) and self.to_bytes() == other.to_bytes()

    __hash__ = None

    def to_bytes(self) -> bytes:
        return b"CRS1" + blob(self.nizk.to_bytes()) + blob(self.ek)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Crs":
        nz, ek = _read_blobs(data, b"CRS1", 2)
        crs = cls(NizkCrs.from_bytes(nz), ek)
        if len(ek) != pke.pk_length(crs.lam):
            raise DecodeError("ek has the wrong length")
        return crs


@dataclass(frozen=True)
class PublicVerKey:
    c_v: bytes
    c_rv: bytes
    pi_v: bytes

    def to_bytes(self) -> bytes:
        return b"PVK1" + blob(self.c_v) + blob(self.c_rv) + blob(self.pi_v)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicVerKey":
        return cls(*_read_blobs(data, b"PVK1", 3))


@dataclass(frozen=True)
class SecretVerKey:
    prfk: PrfKey
    fhek: fhe.FheSecretKey

    def to_bytes(self) -> bytes:
        return b"SVK1" + blob(self.prfk.to_bytes()) + blob(self.fhek.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "SecretVerKey":
        p, f = _read_blobs(data, b"SVK1", 2)
        return cls(PrfKey.from_bytes(p), fhe.FheSecretKey.from_bytes(f))


@dataclass(frozen=True)
class QmaProof:
    alpha: bytes
    evc_p: bytes
    c_rx: bytes
    pi_p: bytes

    def to_bytes(self) -> bytes:
        return b"QMP1" + blob(self.alpha) + blob(self.evc_p) + blob(self.c_rx) + blob(self.pi_p)

    @classmethod
    def from_bytes(cls, data: bytes) -> "QmaProof":
        return cls(*_read_blobs(data, b"QMP1", 4))

    def field_lengths(self) -> tuple[int, int, int, int]:
        return len(self.alpha), len(self.evc_p), len(self.c_rx), len(self.pi_p)


@dataclass(frozen=True)
class Trapdoor:
    td: NizkTrapdoor
    sk: pke.SecretKey


class _Abort:
    def __repr__(self):
        return "ABORT"

    def __bool__(self):
        return False


ABORT = _Abort()


def setup(lam: int, rng=None, rounds: int | None = None) -> Crs:
    rng = ensure(rng)
    nz = nizk_setup(lam, child(rng, "nizk-crs"), rounds)
    ek = child(rng, "ek").bytes(pke.pk_length(lam))
    return Crs(nz, ek)


def sim_setup(lam: int, rng=None, rounds: int | None = None) -> tuple[Crs, Trapdoor]:
    rng = ensure(rng)
    nz, td = nizk_sim_setup(lam, child(rng, "nizk-crs"), rounds)
    kp = pke.pke_gen(lam, child(rng, "ek"))
    return Crs(nz, kp.pk), Trapdoor(td, kp.sk)


def derive_verifier_keys(lam: int, prfk_bits, fhek_seed, nonce) -> tuple[SecretVerKey, fhe.FheCiphertext]:
    """Key generation as a function of its randomness (re-run by tests and the simulator)."""
    prfk = PrfKey(as_bits(prfk_bits), lam)
    fhek = fhe.fhe_gen(lam, DEFAULT_SIZE_BOUND, fhe.TRANSPARENT, seed_bits=fhek_seed)
    return SecretVerKey(prfk, fhek), fhe.fhe_enc(fhek, prfk.key_bits, nonce=nonce)


def vsetup(crs: Crs, rng=None, nizk_backend: str = MPCITH) -> tuple[PublicVerKey, SecretVerKey]:
    rng = ensure(rng)
    lam = crs.lam
    krng = child(rng, "vsetup-keys")
    prfk_bits, seed, nonce = (random_bits(krng, lam) for _ in range(3))
    svk, c_v = derive_verifier_keys(lam, prfk_bits, seed, nonce)
    coins = pke.PkeCoins.sample(lam, child(rng, "vsetup-pke"))
    c_rv = pke.pke_enc(crs.ek, encode_rv(prfk_bits, seed, nonce), coins=coins)
    stmt = rel_v_statement(c_v.to_bytes(), c_rv, crs.ek)
    pi_v = nizk_prove(crs.nizk, stmt, rel_v_witness(prfk_bits, seed, nonce, coins), child(rng, "vsetup-nizk"),
                      backend=nizk_backend)
    return PublicVerKey(c_v.to_bytes(), c_rv, pi_v), svk


def _pvk_valid(crs: Crs, pvk: PublicVerKey) -> bool:
    return nizk_verify(crs.nizk, rel_v_statement(pvk.c_v, pvk.c_rv, crs.ek), pvk.pi_v)


def prove(crs: Crs, pvk: PublicVerKey, x: bytes, wit: bytes, backend, rng=None, nizk_backend: str = MPCITH,
          randomness=None, check_pvk: bool = True):
    """A proof for ``x``, or ABORT if the verifier's key proof does not check.

    ``randomness`` overrides the sigma prover's coins (adversarial experiments);
    ``check_pvk=False`` skips the pvk check for a key already checked.
    """
    rng = ensure(rng)
    if check_pvk and not _pvk_valid(crs, pvk):
        return ABORT
    lam = crs.lam
    c_v = fhe.FheCiphertext.from_bytes(pvk.c_v)
    r = backend.sample_randomness(x, wit, child(rng, "sigma")) if randomness is None else as_bits(randomness)
    alpha = backend.p1(x, wit, r)
    nonce = random_bits(child(rng, "eval"), lam)
    evc = fhe.fhe_eval(build_prover_circuit(x, r, backend), c_v, nonce=nonce)
    coins = pke.PkeCoins.sample(lam, child(rng, "pke"))
    c_rx = pke.pke_enc(crs.ek, pack_randomness(r), coins=coins)
    stmt = rel_p_statement(x, backend.descriptor(), pvk.c_v, evc.to_bytes(), c_rx, crs.ek)
    pi_p = nizk_prove(crs.nizk, stmt, rel_p_witness(r, nonce, coins), child(rng, "nizk"), backend=nizk_backend)
    return QmaProof(alpha, evc.to_bytes(), c_rx, pi_p)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    stage: str | None  # None, "parse", "pi_p" or "sigma"

    def __bool__(self):
        return self.accepted


def verify_detailed(crs: Crs, pvk: PublicVerKey, svk: SecretVerKey, x: bytes, proof, backend) -> Verdict:
    """Accept iff pi_P checks and the decrypted response passes the sigma verifier on beta_x."""
    try:
        if isinstance(proof, (bytes, bytearray)):
            proof = QmaProof.from_bytes(bytes(proof))
        if proof is None or not proof.pi_p:
            return Verdict(False, "parse")
        backend.check_instance(x)
        stmt = rel_p_statement(x, backend.descriptor(), pvk.c_v, proof.evc_p, proof.c_rx, crs.ek)
        evc = fhe.FheCiphertext.from_bytes(proof.evc_p)
    except (DecodeError, ValueError):
        return Verdict(False, "parse")
    if not nizk_verify(crs.nizk, stmt, proof.pi_p):
        return Verdict(False, "pi_p")
    try:
        gamma = fhe.fhe_dec(svk.fhek, evc)
    except (DecodeError, ValueError):
        return Verdict(False, "sigma")
    beta = instance_challenge(svk.prfk.key_bits, x, backend)
    if not backend.verify(x, proof.alpha, beta, gamma):
        return Verdict(False, "sigma")
    return Verdict(True, None)


def verify(crs: Crs, pvk: PublicVerKey, svk: SecretVerKey, x: bytes, proof, backend) -> bool:
    return verify_detailed(crs, pvk, svk, x, proof, backend).accepted


def sim_prove(td: Trapdoor, crs: Crs, pvk: PublicVerKey, x: bytes, backend, rng=None) -> QmaProof | None:
    """Simulated proof without a witness; None stands for the simulator's bottom output."""
    rng = ensure(rng)
    lam = crs.lam
    if not _pvk_valid(crs, pvk):
        return None
    try:
        prfk_bits, seed, nonce = decode_rv(pke.pke_dec(td.sk, pvk.c_rv), lam)
    except DecodeError:
        return None
    _, c_v = derive_verifier_keys(lam, prfk_bits, seed, nonce)
    if c_v.to_bytes() != pvk.c_v:
        return None
    beta = instance_challenge(prfk_bits, x, backend)
    alpha, gamma = backend.simulate(x, beta, child(rng, "sigma"))
    evc = fhe.fhe_eval(build_const_circuit(gamma, lam), c_v, child(rng, "eval"))
    n_r = backend.randomness_length(x)
    c_rx = pke.pke_enc(crs.ek, pack_randomness(np.zeros(n_r, np.uint8)), child(rng, "pke"))
    stmt = rel_p_statement(x, backend.descriptor(), pvk.c_v, evc.to_bytes(), c_rx, crs.ek)
    pi_p = nizk_sim_prove(td.td, crs.nizk, stmt, child(rng, "nizk"), relation=relation_for(stmt))
    return QmaProof(alpha, evc.to_bytes(), c_rx, pi_p)


def leveraged_lambda(x: bytes, eps: float) -> int:
    """ceil(|x|^(2/eps)) with |x| in bits, rounded up to a multiple of 8 and at least 16."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    lam = math.ceil((8 * len(x)) ** (2.0 / eps))
    return max(16, -(-lam // 8) * 8)
