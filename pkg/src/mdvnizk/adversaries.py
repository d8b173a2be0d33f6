"""Attacks: the naive single-theorem construction, the bit-by-bit challenge
decoder that breaks it, the forging prover, and the same adversary pointed at
the PRF-fixed protocol.

The naive verifier publishes an FHE encryption of one random challenge and
reuses it for every proof. A prover with verdict access recovers the challenge
one repetition at a time: it answers repetition ``i`` "as if" its bit were 0
and honestly everywhere else, so acceptance reveals the bit. With the
challenge known, the sigma simulator yields accepting proofs of false
statements.

Fail-stage telemetry recorded by the fixed-protocol experiment is harness
observability only. The adversary itself sees accept bits and nothing else.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fhe
from . import protocol as proto
from .bits import DecodeError, Reader, as_bits, blob
from .circuits import CircuitBuilder, build_const_circuit, build_prover_circuit, p3_gadget
from .nizk import MPCITH, nizk_prove
from .nizk.relations import instance_challenge, pack_randomness, rel_p_statement, rel_p_witness
from .primitives import pke
from .rng import child, ensure, make_rng, random_bits


class BudgetExceeded(RuntimeError):
    pass


class VerdictOracle:
    """Counted access to a verifier's accept bit.

    ``verify_fn(x, proof)`` may return a bool or a ``protocol.Verdict``; the
    stage of a Verdict goes to ``stages`` for the harness, never to the caller.
    """

    def __init__(self, verify_fn, budget: int | None = None):
        self._verify = verify_fn
        self.budget = budget
        self.log: list[tuple[bytes, bool]] = []
        self.stages: list[str | None] = []

    @property
    def count(self) -> int:
        return len(self.log)

    def __call__(self, x: bytes, proof) -> bool:
        if self.budget is not None and self.count >= self.budget:
            raise BudgetExceeded(f"verdict oracle budget of {self.budget} queries used up")
        out = self._verify(x, proof)
        accepted = bool(out)
        self.log.append((bytes(x), accepted))
        self.stages.append(getattr(out, "stage", None))
        return accepted


def default_budget(k: int) -> int:
    return 10 * k


# -- the naive construction -------------------------------------------------------------

@dataclass(frozen=True)
class NaiveKeys:
    pvk: fhe.FheCiphertext  # encryption of beta
    beta: np.ndarray
    fhek: fhe.FheSecretKey = field(repr=False)

    @property
    def svk(self) -> tuple[np.ndarray, fhe.FheSecretKey]:
        return self.beta, self.fhek


@dataclass(frozen=True)
class NaiveProof:
    alpha: bytes
    evc: bytes

    def to_bytes(self) -> bytes:
        return b"NVP1" + blob(self.alpha) + blob(self.evc)

    @classmethod
    def from_bytes(cls, data: bytes) -> "NaiveProof":
        r = Reader(data)
        r.expect(b"NVP1")
        a, e = r.blob(), r.blob()
        r.finish()
        return cls(a, e)


def naive_vsetup(lam: int, k: int, rng=None, fhe_backend: str = fhe.TRANSPARENT) -> NaiveKeys:
    """One uniform challenge of ``k`` bits, published under FHE."""
    if k < 0:
        raise ValueError("challenge length must be nonnegative")
    rng = ensure(rng)
    fhek = fhe.fhe_gen(lam, backend=fhe_backend, rng=child(rng, "fhek"))
    beta = random_bits(child(rng, "beta"), k)
    return NaiveKeys(fhe.fhe_enc(fhek, beta, child(rng, "enc")), beta, fhek)


def response_circuit(x: bytes, r, backend, forced: dict[int, int] | None = None):
    """Challenge bits in, response out, with ``r`` hard-wired.

    ``forced`` maps a repetition to a challenge value used for it regardless
    of the encrypted input; that is the decoder's "as if b_i = 0" move.
    """
    layout = backend.p3_layout(x)
    n_beta = backend.challenge_length(x)
    bld = CircuitBuilder(n_beta)
    beta = bld.input_wires().copy()
    for rep, value in (forced or {}).items():
        offset, nbits, _ = layout[rep]
        bits = [(value >> (nbits - 1 - j)) & 1 for j in range(nbits)]
        beta[offset:offset + nbits] = CircuitBuilder.const(bits)
    return bld.build(p3_gadget(bld, beta, CircuitBuilder.const(as_bits(r)), layout))


def naive_prove(pvk: fhe.FheCiphertext, x: bytes, wit: bytes, backend, rng=None,
                forced: dict[int, int] | None = None) -> NaiveProof:
    rng = ensure(rng)
    r = backend.sample_randomness(x, wit, child(rng, "sigma"))
    alpha = backend.p1(x, wit, r)
    evc = fhe.fhe_eval(response_circuit(x, r, backend, forced), pvk, child(rng, "eval"))
    return NaiveProof(alpha, evc.to_bytes())


def naive_verify(svk, x: bytes, proof, backend) -> bool:
    beta, fhek = svk
    try:
        if isinstance(proof, (bytes, bytearray)):
            proof = NaiveProof.from_bytes(bytes(proof))
        gamma = fhe.fhe_dec(fhek, fhe.FheCiphertext.from_bytes(proof.evc))
    except (DecodeError, ValueError):
        return False
    return backend.verify(x, proof.alpha, beta, gamma)


def naive_oracle(keys: NaiveKeys, backend, budget: int | None = None) -> VerdictOracle:
    return VerdictOracle(lambda x, p: naive_verify(keys.svk, x, p, backend), budget)


def _rep_values(backend, x: bytes, rep: int) -> int:
    return 1 << backend.p3_layout(x)[rep][1]


def _assemble(backend, x: bytes, values: list[int]) -> np.ndarray:
    layout = backend.p3_layout(x)
    out = np.zeros(backend.challenge_length(x), np.uint8)
    for (offset, nbits, _), v in zip(layout, values):
        for j in range(nbits):
            out[offset + j] = (v >> (nbits - 1 - j)) & 1
    return out


def decode_challenge(oracle: VerdictOracle, pvk: fhe.FheCiphertext, x_yes: bytes, wit: bytes, backend,
                     rng=None) -> np.ndarray:
    """Recover the naive verifier's challenge, one repetition per query.

    For one-bit repetitions this makes exactly one query each. Wider
    repetitions try values in order and take the last one if none is accepted;
    the result then agrees with the challenge up to values the verifier treats
    the same way.
    """
    rng = ensure(rng)
    values = []
    for rep in range(len(backend.p3_layout(x_yes))):
        m = _rep_values(backend, x_yes, rep)
        found = m - 1
        for v in range(m - 1):
            proof = naive_prove(pvk, x_yes, wit, backend, child(rng, f"decode-{rep}-{v}"), forced={rep: v})
            if oracle(x_yes, proof):
                found = v
                break
        values.append(found)
    return _assemble(backend, x_yes, values)


def forge_proof(beta_hat, x_no: bytes, backend, pvk: fhe.FheCiphertext, rng=None) -> NaiveProof:
    """Simulated transcript for the known challenge, injected by a constant circuit."""
    rng = ensure(rng)
    alpha, gamma = backend.simulate(x_no, as_bits(beta_hat), child(rng, "sim"))
    evc = fhe.fhe_eval(build_const_circuit(gamma, pvk.arity), pvk, child(rng, "eval"))
    return NaiveProof(alpha, evc.to_bytes())


def random_guess_prover(oracle: VerdictOracle, pvk: fhe.FheCiphertext, x_no: bytes, backend, trials: int,
                        rng=None) -> int:
    """Witness-less baseline: guess the challenge, forge for the guess, count acceptances."""
    rng = ensure(rng)
    n = backend.challenge_length(x_no)
    accepted = 0
    for t in range(trials):
        guess = random_bits(child(rng, f"guess-{t}"), n)
        accepted += oracle(x_no, forge_proof(guess, x_no, backend, pvk, child(rng, f"forge-{t}")))
    return accepted


# -- the same adversary against the fixed protocol --------------------------------------------

INJECT = "inject"
CONSISTENT = "consistent"


def _forge_consistent(crs, pvk, x_no: bytes, beta_hat, backend, rng, nizk_backend: str):
    """Honest pi_P for a randomness string whose response on ``beta_hat`` is the simulated one.

    Every ciphertext is consistent, so pi_P is a true statement; the forgery
    can only pass if the verifier's challenge for ``x_no`` equals ``beta_hat``.
    """
    alpha, gamma = backend.simulate(x_no, beta_hat, child(rng, "sim"))
    r = random_bits(child(rng, "r"), backend.randomness_length(x_no))
    pos = 0
    for offset, nbits, table in backend.p3_layout(x_no):
        v = 0
        for j in range(nbits):
            v = (v << 1) | int(beta_hat[offset + j])
        row = np.asarray(table)[v]
        seg = gamma[pos:pos + row.size]
        pos += row.size
        r[row[row >= 0]] = seg[row >= 0]
    lam = crs.lam
    c_v = fhe.FheCiphertext.from_bytes(pvk.c_v)
    nonce = random_bits(child(rng, "eval"), lam)
    evc = fhe.fhe_eval(build_prover_circuit(x_no, r, backend), c_v, nonce=nonce)
    coins = pke.PkeCoins.sample(lam, child(rng, "pke"))
    c_rx = pke.pke_enc(crs.ek, pack_randomness(r), coins=coins)
    stmt = rel_p_statement(x_no, backend.descriptor(), pvk.c_v, evc.to_bytes(), c_rx, crs.ek)
    pi_p = nizk_prove(crs.nizk, stmt, rel_p_witness(r, nonce, coins), child(rng, "nizk"), backend=nizk_backend)
    return proto.QmaProof(alpha, evc.to_bytes(), c_rx, pi_p)


def attack_fixed_protocol(oracle: VerdictOracle, crs, pvk, x_yes: bytes, wit: bytes, x_no: bytes, backend,
                          rng=None, mode: str = INJECT, nizk_backend: str = MPCITH):
    """Run the decoder on ``x_yes``, then forge on ``x_no``.

    Decoding pins repetition ``i`` so its response is the "challenge 0" one
    whatever the challenge is; all other repetitions stay honest. The forgery
    either injects the simulated response with a constant circuit and reuses
    the last pi_P (``inject``), or builds a fully consistent proof around it
    (``consistent``). Returns ``(beta_hat, accepted)``.
    """
    rng = ensure(rng)
    values = []
    last = None
    for rep in range(len(backend.p3_layout(x_yes))):
        m = _rep_values(backend, x_yes, rep)
        found = m - 1
        for v in range(m - 1):
            qrng = child(rng, f"decode-{rep}-{v}")
            r = backend.pin_response(x_yes, backend.sample_randomness(x_yes, wit, child(qrng, "r")), rep, v)
            last = proto.prove(crs, pvk, x_yes, wit, backend, qrng, nizk_backend=nizk_backend,
                               randomness=r, check_pvk=not values and v == 0)
            if last is proto.ABORT:
                raise ValueError("the verifier key does not check")
            if oracle(x_yes, last):
                found = v
                break
        values.append(found)
    beta_hat = _assemble(backend, x_yes, values)

    frng = child(rng, "forge")
    if mode == INJECT:
        alpha, gamma = backend.simulate(x_no, beta_hat, child(frng, "sim"))
        c_v = fhe.FheCiphertext.from_bytes(pvk.c_v)
        evc = fhe.fhe_eval(build_const_circuit(gamma, c_v.arity), c_v, child(frng, "eval"))
        if last is None:
            forged = proto.QmaProof(alpha, evc.to_bytes(), b"", b"")
        else:
            forged = proto.QmaProof(alpha, evc.to_bytes(), last.c_rx, last.pi_p)
    elif mode == CONSISTENT:
        forged = _forge_consistent(crs, pvk, x_no, beta_hat, backend, frng, nizk_backend)
    else:
        raise ValueError(f"unknown forgery mode {mode!r}")
    return beta_hat, oracle(x_no, forged)


def run_fixed_experiment(seed: int, crs, pvk, svk, x_yes: bytes, wit: bytes, x_no: bytes, backend,
                         mode: str = INJECT, budget: int | None = None, nizk_backend: str = MPCITH) -> dict:
    """One seeded trial of the fixed-protocol attack as a JSON-ready report.

    The harness knows ``svk`` and uses it only to score the decoded challenge
    and to read the rejection stage.
    """
    k = backend.challenge_length(x_yes)
    oracle = VerdictOracle(lambda x, p: proto.verify_detailed(crs, pvk, svk, x, p, backend),
                           budget if budget is not None else default_budget(k))
    beta_hat, accepted = attack_fixed_protocol(oracle, crs, pvk, x_yes, wit, x_no, backend,
                                               make_rng(seed, "attack-fixed"), mode, nizk_backend)
    truth = instance_challenge(svk.prfk.key_bits, x_yes, backend)
    return {
        "experiment": "attack-fixed",
        "seed": seed,
        "k": backend.k,
        "queries": oracle.count,
        "decoded": bool(np.array_equal(beta_hat, truth)),
        "forged_accepted": bool(accepted),
        "fail_stage": oracle.stages[-1],
        "mode": mode,
    }


def run_naive_experiment(seed: int, lam: int, x_yes: bytes, wit: bytes, x_no: bytes, backend,
                         budget: int | None = None, fhe_backend: str = fhe.TRANSPARENT) -> dict:
    rng = make_rng(seed, "attack-naive")
    k = backend.challenge_length(x_yes)
    keys = naive_vsetup(lam, k, child(rng, "vsetup"), fhe_backend)
    oracle = naive_oracle(keys, backend, budget if budget is not None else default_budget(k))
    beta_hat = decode_challenge(oracle, keys.pvk, x_yes, wit, backend, child(rng, "decode"))
    queries = oracle.count
    accepted = oracle(x_no, forge_proof(beta_hat, x_no, backend, keys.pvk, child(rng, "forge")))
    return {
        "experiment": "attack-naive",
        "seed": seed,
        "k": backend.k,
        "queries": queries,
        "decoded": bool(np.array_equal(beta_hat, keys.beta)),
        "forged_accepted": bool(accepted),
        "fail_stage": None if accepted else "sigma",
    }
