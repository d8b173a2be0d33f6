import pytest

from mdvnizk import fhe, protocol as proto
from mdvnizk.circuits import build_prover_circuit
from mdvnizk.instances import get
from mdvnizk.nizk import (TRANSCRIPT_CHECK, FalseStatement, NizkCrs, ProgrammableOracle,
                          ProgrammingConflict, SimulationFailure, Statement, UnknownRelation, Witness, crs_length,
                          nizk_prove, nizk_setup, nizk_sim_prove, nizk_sim_setup, nizk_verify, relation_check,
                          relation_for, search_forgery)
from mdvnizk.nizk import mpcith
from mdvnizk.nizk.oracle import answer_to_trits, trits_to_answer
from mdvnizk.nizk.relations import pack_randomness, rel_p_statement, rel_p_witness, rel_v_statement
from mdvnizk.primitives import pke
from mdvnizk.rng import make_rng, random_bits
from mdvnizk.sigma import make_backend

LAM = 32


def rel_p_case(crs, pvk, seed=0, inst="K3", k=2):
    """A true REL_P statement with its witness, built the way the prover builds it."""
    rng = make_rng(seed, "rel-p-case")
    i = get(inst)
    backend = make_backend(i.backend, crs.lam, k)
    r = backend.sample_randomness(i.x, i.wit, rng)
    nonce = random_bits(rng, crs.lam)
    evc = fhe.fhe_eval(build_prover_circuit(i.x, r, backend), fhe.FheCiphertext.from_bytes(pvk.c_v), nonce=nonce)
    coins = pke.PkeCoins.sample(crs.lam, rng)
    c_rx = pke.pke_enc(crs.ek, pack_randomness(r), coins=coins)
    stmt = rel_p_statement(i.x, backend.descriptor(), pvk.c_v, evc.to_bytes(), c_rx, crs.ek)
    return stmt, rel_p_witness(r, nonce, coins), backend


def false_case(crs, pvk, seed=0):
    """Same shape as a true statement, but evc_P holds a response nothing produces."""
    stmt, wit, backend = rel_p_case(crs, pvk, seed)
    x, desc, c_v, evc, c_rx, ek = stmt.parts
    ct = fhe.FheCiphertext.from_bytes(evc)
    y = fhe.parse_transparent(ct).plaintext ^ 1
    bad = fhe.transparent_evaluated(ct.lam, ct.size_bound, y, random_bits(make_rng(seed), ct.lam))
    return rel_p_statement(x, desc, c_v, bad.to_bytes(), c_rx, ek), wit


@pytest.fixture(scope="module")
def case(keys):
    crs, pvk, svk = keys
    stmt, wit, backend = rel_p_case(crs, pvk)
    return crs, pvk, stmt, wit


# -- crs ---------------------------------------------------------------------------------

@pytest.mark.parametrize("lam", [16, 32])
def test_crs_shape(lam):
    crs = nizk_setup(lam, make_rng(lam))
    assert len(crs.data) == crs_length(lam)
    assert NizkCrs.from_bytes(crs.to_bytes()) == crs
    assert nizk_setup(lam, make_rng(lam + 1)).data != crs.data


# -- relations ---------------------------------------------------------------------------

def test_relation_check(case):
    crs, pvk, stmt, wit = case
    assert relation_check(stmt, wit)
    bad_stmt, _ = false_case(crs, pvk)
    assert not relation_check(bad_stmt, wit)


def test_relation_v_holds_for_honest_keys(keys):
    crs, pvk, _ = keys
    assert proto._pvk_valid(crs, pvk)
    assert relation_for(rel_v_statement(pvk.c_v, pvk.c_rv, crs.ek)).circuit.n_outputs > 0


def test_unknown_relation():
    with pytest.raises(UnknownRelation):
        relation_check(Statement(9, (b"",)), Witness(9, ()))


def test_statement_and_witness_serialization(case):
    _, _, stmt, wit = case
    assert Statement.from_bytes(stmt.to_bytes()) == stmt
    assert Witness.from_bytes(wit.to_bytes()).to_bytes() == wit.to_bytes()


# -- mpc-in-the-head ---------------------------------------------------------------------

def test_prove_verify_and_randomized(case):
    crs, _, stmt, wit = case
    p1 = nizk_prove(crs.nizk, stmt, wit, make_rng(1))
    p2 = nizk_prove(crs.nizk, stmt, wit, make_rng(2))
    assert nizk_verify(crs.nizk, stmt, p1) and nizk_verify(crs.nizk, stmt, p2)
    assert p1 != p2


def test_refuses_false_statement(keys):
    crs, pvk, _ = keys
    bad, wit = false_case(crs, pvk)
    with pytest.raises(FalseStatement):
        nizk_prove(crs.nizk, bad, wit, make_rng(3))


def test_proof_size_formula():
    crs = proto.Crs(nizk_setup(16, make_rng(4), rounds=16), make_rng(5).bytes(pke.pk_length(16)))
    pvk, _ = proto.vsetup(crs, make_rng(6))
    stmt, wit, _ = rel_p_case(crs, pvk)
    for st, proof in ((stmt, nizk_prove(crs.nizk, stmt, wit, make_rng(7))),
                      (rel_v_statement(pvk.c_v, pvk.c_rv, crs.ek), pvk.pi_v)):
        c = relation_for(st).circuit
        assert len(proof) == mpcith.proof_length(16, 16, c.inputs, c.n_and)


def test_statement_swap_rejected(case):
    crs, pvk, stmt, wit = case
    other, _, _ = rel_p_case(crs, pvk, seed=1)
    p = nizk_prove(crs.nizk, stmt, wit, make_rng(8))
    assert not nizk_verify(crs.nizk, other, p)


def test_bit_flips_rejected(case):
    crs, _, stmt, wit = case
    p = nizk_prove(crs.nizk, stmt, wit, make_rng(9))
    rng = make_rng(10, "flips")
    rejected = 0
    for _ in range(100):
        b = bytearray(p)
        b[int(rng.integers(len(b)))] ^= 1 << int(rng.integers(8))
        rejected += not nizk_verify(crs.nizk, stmt, bytes(b))
    assert rejected >= 99


def test_tampered_statement_ciphertext_rejected(case):
    crs, _, stmt, wit = case
    p = nizk_prove(crs.nizk, stmt, wit, make_rng(11))
    parts = list(stmt.parts)
    c_rx = bytearray(parts[4])
    c_rx[-1] ^= 1
    parts[4] = bytes(c_rx)
    assert not nizk_verify(crs.nizk, Statement(stmt.rel, tuple(parts)), p)


def test_truncated_and_garbage_proofs(case):
    crs, _, stmt, wit = case
    p = nizk_prove(crs.nizk, stmt, wit, make_rng(12))
    for bad in (b"", p[:10], p[:-1], p + b"\0", b"junk"):
        assert not nizk_verify(crs.nizk, stmt, bad)


def test_search_forgery_finds_nothing(keys):
    crs, pvk, _ = keys
    bad, _ = false_case(crs, pvk, seed=2)
    proof, used = search_forgery(crs.nizk, bad, 10_000, make_rng(13))
    assert proof is None and used == 10_000


# -- simulation --------------------------------------------------------------------------

def test_sim_proofs_verify_under_one_crs(keys):
    crs, pvk, _ = keys
    sim_crs, td = nizk_sim_setup(LAM, make_rng(14), rounds=16)
    pcrs = proto.Crs(sim_crs, crs.ek)
    stmt, _, _ = rel_p_case(pcrs, pvk)
    rel = relation_for(stmt)
    rng = make_rng(15)
    for _ in range(100):
        p = nizk_sim_prove(td, sim_crs, stmt, rng, relation=rel)
        assert nizk_verify(sim_crs, stmt, p, relation=rel)


def test_sim_proves_false_statements_only_with_the_trapdoor(keys):
    crs, pvk, _ = keys
    sim_crs, td = nizk_sim_setup(LAM, make_rng(16), rounds=16)
    bad, _ = false_case(proto.Crs(sim_crs, crs.ek), pvk)
    p = nizk_sim_prove(td, sim_crs, bad, make_rng(17))
    assert nizk_verify(sim_crs, bad, p)
    # a fresh copy of the same crs bytes has an unprogrammed oracle
    assert not nizk_verify(NizkCrs.from_bytes(sim_crs.to_bytes()), bad, p)
    _, other_td = nizk_sim_setup(LAM, make_rng(18), rounds=16)
    with pytest.raises(SimulationFailure):
        nizk_sim_prove(other_td, sim_crs, bad, make_rng(19))


def test_sim_and_real_proofs_same_length(case):
    crs, _, stmt, wit = case
    sim_crs, td = nizk_sim_setup(LAM, make_rng(20), rounds=16)
    real = nizk_prove(sim_crs, stmt, wit, make_rng(21))
    assert len(nizk_sim_prove(td, sim_crs, stmt, make_rng(22))) == len(real)


def test_oracle_programming_rules():
    o = ProgrammableOracle(b"k")
    a = o.query(b"q", 8)
    o.program(b"q", a)  # consistent with the earlier answer
    with pytest.raises(ProgrammingConflict):
        o.program(b"q", a)
    o.query(b"r", 8)
    with pytest.raises(ProgrammingConflict):
        o.program(b"r", bytes(8) if a != bytes(8) else b"\1" * 8)
    assert o.programmed == 1


def test_trit_codec():
    t = [0, 1, 2, 2, 1, 0]
    assert answer_to_trits(trits_to_answer(t), len(t)) == t
    assert answer_to_trits(bytes([255, 4, 5]), 2) == [1, 2]


# -- transcript-check backend ------------------------------------------------------------

def test_transcript_check_backend(case):
    crs, pvk, stmt, wit = case
    p = nizk_prove(crs.nizk, stmt, wit, backend=TRANSCRIPT_CHECK)
    assert nizk_verify(crs.nizk, stmt, p)
    other, _, _ = rel_p_case(crs, pvk, seed=3)
    assert not nizk_verify(crs.nizk, other, p)
    with pytest.raises(ValueError):
        nizk_prove(crs.nizk, stmt, wit, backend="groth16")
