import numpy as np
import pytest

from mdvnizk import fhe, protocol as proto
from mdvnizk.bits import DecodeError
from mdvnizk.experiments import malformed_pvks
from mdvnizk.instances import get
from mdvnizk.nizk import TRANSCRIPT_CHECK
from mdvnizk.nizk.relations import decode_rv
from mdvnizk.primitives import pke
from mdvnizk.primitives.prf import prf_stream
from mdvnizk.rng import make_rng
from mdvnizk.sigma import hamiltonicity as H, make_backend

from conftest import LAM

K4 = get("K4")


@pytest.fixture(scope="module")
def ham():
    return make_backend("ham", LAM, 8)


@pytest.fixture(scope="module")
def proof(keys, ham):
    crs, pvk, _ = keys
    return proto.prove(crs, pvk, K4.x, K4.wit, ham, make_rng(1, "proof"))


# -- setup and keys ----------------------------------------------------------------------

@pytest.mark.parametrize("lam", [16, 32])
def test_crs_contract(lam):
    crs = proto.setup(lam, make_rng(lam, "crs"), rounds=4)
    assert len(crs.ek) == pke.pk_length(lam)
    assert proto.Crs.from_bytes(crs.to_bytes()) == crs
    assert proto.setup(lam, make_rng(lam + 1, "crs"), rounds=4).to_bytes() != crs.to_bytes()


def test_crs_rejects_bad_ek():
    crs = proto.setup(LAM, make_rng(2), rounds=4)
    with pytest.raises(DecodeError):
        proto.Crs.from_bytes(proto.Crs(crs.nizk, crs.ek[:-2]).to_bytes())


def test_sim_crs_has_honest_shape(keys):
    crs, _, _ = keys
    sim, td = proto.sim_setup(LAM, make_rng(3), rounds=16)
    assert len(sim.to_bytes()) == len(crs.to_bytes())
    assert proto.Crs.from_bytes(sim.to_bytes()) == sim
    assert pke.pke_dec(td.sk, pke.pke_enc(sim.ek, b"ek works", make_rng(4))) == b"ek works"


def test_key_serialization(keys):
    _, pvk, svk = keys
    assert proto.PublicVerKey.from_bytes(pvk.to_bytes()) == pvk
    assert proto.SecretVerKey.from_bytes(svk.to_bytes()).to_bytes() == svk.to_bytes()


def test_independent_key_pairs_differ(keys):
    crs, pvk, svk = keys
    pvk2, svk2 = proto.vsetup(crs, make_rng(5))
    assert pvk2.c_v != pvk.c_v and svk2.to_bytes() != svk.to_bytes()


def test_key_randomness_re_derivation(sim_keys):
    crs, td, pvk, svk = sim_keys
    prfk, seed, nonce = decode_rv(pke.pke_dec(td.sk, pvk.c_rv), LAM)
    svk2, c_v = proto.derive_verifier_keys(LAM, prfk, seed, nonce)
    assert c_v.to_bytes() == pvk.c_v
    assert svk2.to_bytes() == svk.to_bytes()


# -- prove / verify --------------------------------------------------------------------------

def test_honest_proof_accepts(keys, ham, proof):
    crs, pvk, svk = keys
    assert proto.verify(crs, pvk, svk, K4.x, proof, ham)
    assert proto.verify(crs, pvk, svk, K4.x, proof.to_bytes(), ham)
    assert proto.QmaProof.from_bytes(proof.to_bytes()) == proof


def test_honest_yes_instances_accept(keys):
    crs, pvk, svk = keys
    rng = make_rng(6, "yes")
    for name, k in (("K3", 4), ("C5", 4), ("ham8", 4), ("cldm-bell", 3), ("cldm-ghz", 3)):
        inst = get(name)
        b = make_backend(inst.backend, LAM, k)
        p = proto.prove(crs, pvk, inst.x, inst.wit, b, rng, check_pvk=False)
        assert proto.verify(crs, pvk, svk, inst.x, p, b), name


def test_evc_decrypts_to_sigma_response(keys, ham):
    crs, pvk, svk = keys
    r = ham.sample_randomness(K4.x, K4.wit, make_rng(7))
    p = proto.prove(crs, pvk, K4.x, K4.wit, ham, make_rng(8), randomness=r, check_pvk=False)
    gamma = fhe.fhe_dec(svk.fhek, fhe.FheCiphertext.from_bytes(p.evc_p))
    beta = prf_stream(svk.prfk.key_bits, K4.x, ham.challenge_length(K4.x))
    assert np.array_equal(gamma, ham.p3(K4.x, beta, r))
    assert p.alpha == ham.p1(K4.x, K4.wit, r)


def test_flipped_pi_v_aborts(keys, ham):
    crs, pvk, _ = keys
    pi = bytearray(pvk.pi_v)
    pi[len(pi) // 2] ^= 4
    out = proto.prove(crs, proto.PublicVerKey(pvk.c_v, pvk.c_rv, bytes(pi)), K4.x, K4.wit, ham, make_rng(9))
    assert out is proto.ABORT and not out


def test_replayed_proof_rejected(keys, ham, proof):
    crs, pvk, svk = keys
    rng = make_rng(10, "replay")
    rejected = 0
    for _ in range(100):
        adj, _ = H.random_hamiltonian_graph(4, rng, density=float(rng.random()))
        x2 = H.encode_graph(adj)
        rejected += (x2 == K4.x) or not proto.verify(crs, pvk, svk, x2, proof, ham)
    assert rejected == 100


def test_response_for_wrong_challenge_fails_sigma(keys, ham):
    # a consistent proof whose response answers another instance's challenge
    crs, pvk, svk = keys
    x2 = H.encode_graph(H.cycle_graph(4))
    r = ham.sample_randomness(K4.x, K4.wit, make_rng(11))
    p = proto.prove(crs, pvk, K4.x, K4.wit, ham, make_rng(12), randomness=r, check_pvk=False)
    beta_x = prf_stream(svk.prfk.key_bits, K4.x, ham.k)
    beta_x2 = prf_stream(svk.prfk.key_bits, x2, ham.k)
    assert not np.array_equal(beta_x, beta_x2)
    gamma_wrong = ham.p3(K4.x, beta_x2, r)
    assert not ham.verify(K4.x, p.alpha, beta_x, gamma_wrong)


def test_verdict_stages(keys, ham, proof):
    crs, pvk, svk = keys
    assert proto.verify_detailed(crs, pvk, svk, K4.x, b"junk", ham).stage == "parse"
    assert proto.verify_detailed(crs, pvk, svk, K4.x, proof.to_bytes()[:-3], ham).stage == "parse"
    assert proto.verify_detailed(crs, pvk, svk, b"HAM1", proof, ham).stage == "parse"
    bad_pi = bytearray(proof.pi_p)
    bad_pi[-1] ^= 1
    v = proto.verify_detailed(crs, pvk, svk, K4.x, proto.QmaProof(proof.alpha, proof.evc_p, proof.c_rx,
                                                                  bytes(bad_pi)), ham)
    assert v.stage == "pi_p" and not v
    # alpha is not part of the consistency statement, so tampering with it surfaces at the sigma check
    alpha = bytearray(proof.alpha)
    alpha[-1] ^= 1
    v = proto.verify_detailed(crs, pvk, svk, K4.x, proto.QmaProof(bytes(alpha), proof.evc_p, proof.c_rx,
                                                                   proof.pi_p), ham)
    assert v.stage == "sigma"


def test_other_verifier_keys_reject(keys, ham, proof):
    crs, pvk, svk = keys
    pvk2, svk2 = proto.vsetup(crs, make_rng(13))
    assert not proto.verify(crs, pvk2, svk2, K4.x, proof, ham)


def test_no_instance_has_no_witness(keys, ham):
    crs, pvk, _ = keys
    with pytest.raises(Exception):
        proto.prove(crs, pvk, get("P4").x, K4.wit, ham, make_rng(14), check_pvk=False)


def test_transcript_check_backend_end_to_end(keys, ham):
    crs, _, _ = keys
    pvk, svk = proto.vsetup(crs, make_rng(15), nizk_backend=TRANSCRIPT_CHECK)
    p = proto.prove(crs, pvk, K4.x, K4.wit, ham, make_rng(16), nizk_backend=TRANSCRIPT_CHECK)
    assert proto.verify(crs, pvk, svk, K4.x, p, ham)


# -- simulation --------------------------------------------------------------------------------

def test_sim_proofs_verify_and_match_real_lengths(sim_keys):
    crs, td, pvk, svk = sim_keys
    b = make_backend("ham", LAM, 2)
    inst = get("K3")
    rng = make_rng(17, "sim-pairs")
    for _ in range(100):
        sp = proto.sim_prove(td, crs, pvk, inst.x, b, rng)
        assert proto.verify(crs, pvk, svk, inst.x, sp, b)
        rp = proto.prove(crs, pvk, inst.x, inst.wit, b, rng, check_pvk=False)
        assert sp.field_lengths() == rp.field_lengths()


def test_sim_handles_no_instances(sim_keys):
    crs, td, pvk, svk = sim_keys
    b = make_backend("ham", LAM, 4)
    x = get("P4").x
    assert proto.verify(crs, pvk, svk, x, proto.sim_prove(td, crs, pvk, x, b, make_rng(18)), b)


def test_sim_outputs_bottom_on_malformed_keys(sim_keys):
    crs, td, pvk, svk = sim_keys
    b = make_backend("ham", LAM, 2)
    bad = malformed_pvks(crs, pvk, svk, 10, make_rng(19))
    assert all(proto.sim_prove(td, crs, k, K4.x, b, make_rng(20)) is None for k in bad)


def test_sim_bottom_when_c_v_and_randomness_disagree(sim_keys, monkeypatch):
    # a key whose pi_V would pass but whose c_V is not what c_rV's randomness derives
    crs, td, pvk, svk = sim_keys
    other, _ = proto.vsetup(crs, make_rng(21))
    mixed = proto.PublicVerKey(other.c_v, pvk.c_rv, pvk.pi_v)
    monkeypatch.setattr(proto, "_pvk_valid", lambda crs, pvk: True)
    b = make_backend("ham", LAM, 2)
    assert proto.sim_prove(td, crs, mixed, K4.x, b, make_rng(22)) is None
    garbage = proto.PublicVerKey(pvk.c_v, pke.pke_enc(crs.ek, b"not key randomness", make_rng(23)), pvk.pi_v)
    assert proto.sim_prove(td, crs, garbage, K4.x, b, make_rng(24)) is None


# -- parameters ----------------------------------------------------------------------------------

def test_leveraged_lambda():
    x = bytes(4)  # 32 bits
    assert proto.leveraged_lambda(x, 2.0) == 32
    assert proto.leveraged_lambda(x, 4.0) == 16  # sqrt(32) rounds up to the minimum
    assert proto.leveraged_lambda(bytes(10), 2.0) == 80
    assert proto.leveraged_lambda(x, 1.0) == 1024
    with pytest.raises(ValueError):
        proto.leveraged_lambda(x, 0)
