import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdvnizk import fhe
from mdvnizk.circuits import Circuit, CircuitBuilder, eval_circuit
from mdvnizk.rng import make_rng, random_bits
from mdvnizk.stats import chi_square_same_dist

from test_circuits import from_gates, random_circuit

LAM = 32


@pytest.fixture(scope="module")
def sk():
    return fhe.fhe_gen(LAM, rng=make_rng(1, "fhe-key"))


def test_independent_keys_differ():
    rng = make_rng(2)
    keys = {fhe.fhe_gen(LAM, rng=rng).to_bytes() for _ in range(50)}
    assert len(keys) == 50


def test_key_and_ciphertext_serialization(sk):
    assert fhe.FheSecretKey.from_bytes(sk.to_bytes()) == sk
    ct = fhe.fhe_enc(sk, "1011", make_rng(3))
    assert fhe.FheCiphertext.from_bytes(ct.to_bytes()) == ct


def test_eval_matches_plaintext_oracle(sk):
    rng = make_rng(4, "fhe-eval")
    for _ in range(100):
        n_in = int(rng.integers(1, 9))
        gates, outs = random_circuit(rng, n_in, int(rng.integers(1, 30)), int(rng.integers(1, 5)))
        c = from_gates(n_in, gates, outs)
        x = random_bits(rng, n_in)
        assert np.array_equal(fhe.fhe_dec(sk, fhe.fhe_eval(c, fhe.fhe_enc(sk, x, rng), rng)), eval_circuit(c, x))


def test_wrong_key_is_flagged(sk):
    rng = make_rng(5)
    for _ in range(20):
        other = fhe.fhe_gen(LAM, rng=rng)
        with pytest.raises(fhe.FheDecodeFailure):
            fhe.fhe_dec(other, fhe.fhe_enc(sk, random_bits(rng, 8), rng))


def test_extract_round_trip(sk):
    rng = make_rng(6)
    for _ in range(100):
        x = random_bits(rng, int(rng.integers(0, 20)))
        assert np.array_equal(fhe.fhe_extract(fhe.fhe_enc(sk, x, rng)), x)


@given(st.binary(max_size=64), st.integers(0, 64))
def test_extract_fuzz_never_crashes(payload, arity):
    ct = fhe.FheCiphertext(fhe.TRANSPARENT, LAM, 100, arity, payload)
    try:
        out = fhe.fhe_extract(ct)
    except fhe.ExtractFailure:
        return
    assert out.size == arity


def test_size_bound_and_arity_errors(sk):
    small = fhe.fhe_gen(LAM, size_bound=2, rng=make_rng(7))
    b = CircuitBuilder(2)
    w = b.input_wires()
    c = b.build(b.not_(b.and_(b.xor(w[0:1], w[1:2]), w[0:1])))
    with pytest.raises(fhe.LevelExceeded):
        fhe.fhe_eval(c, fhe.fhe_enc(small, "10"))
    with pytest.raises(fhe.FheError):
        fhe.fhe_eval(c, fhe.fhe_enc(sk, "1"))


def test_sim_matches_eval_distribution(sk):
    rng = make_rng(8, "fhe-sim")
    b = CircuitBuilder(8)
    w = b.input_wires()
    c = b.build(np.concatenate([b.xor(w[0:4], w[4:8]), b.and_(w[0:2], w[2:4])]))
    x = random_bits(rng, 8)
    ct = fhe.fhe_enc(sk, x, rng)
    y = eval_circuit(c, x)
    ev = [fhe.fhe_eval(c, ct, rng).to_bytes() for _ in range(10_000)]
    sm = [fhe.fhe_sim(LAM, y, rng=rng).to_bytes() for _ in range(10_000)]
    assert chi_square_same_dist(ev, sm).passed


def test_evaluated_ciphertexts_depend_only_on_output(sk):
    # two different circuits with the same output under fixed randomness give identical bytes
    ct = fhe.fhe_enc(sk, "11", make_rng(9))
    b1 = CircuitBuilder(2)
    w = b1.input_wires()
    c1 = b1.build(b1.and_(w[0:1], w[1:2]))
    c2 = Circuit(2, np.array([5], np.uint8), np.zeros(1, np.int64), np.zeros(1, np.int64), np.array([2]))
    nonce = random_bits(make_rng(10), LAM)
    assert fhe.fhe_eval(c1, ct, nonce=nonce) == fhe.fhe_eval(c2, ct, nonce=nonce)


# -- lattice backend ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def lsk():
    return fhe.fhe_gen(LAM, backend=fhe.LATTICE, rng=make_rng(11, "gsw"))


def test_lattice_round_trip(lsk):
    rng = make_rng(12)
    x = random_bits(rng, 8)
    assert np.array_equal(fhe.fhe_dec(lsk, fhe.fhe_enc(lsk, x, rng)), x)
    assert np.array_equal(fhe.fhe_extract(fhe.fhe_enc(lsk, x, rng)), x)


@pytest.mark.parametrize("op", [1, 2, 3, 4, 5])
def test_lattice_single_gates(lsk, op):
    rng = make_rng(13 + op)
    c = Circuit(2, np.array([op], np.uint8), np.zeros(1, np.int64), np.ones(1, np.int64), np.array([2]))
    for x in ("00", "01", "10", "11"):
        got = fhe.fhe_dec(lsk, fhe.fhe_eval(c, fhe.fhe_enc(lsk, x, rng), rng))
        assert np.array_equal(got, eval_circuit(c, x))


def _actual_noise(s, ct, mu):
    mats, recorded = fhe._gsw_unpack(ct)
    ph = fhe._phase(s, mats[0])
    Gt = fhe._G @ np.append(-np.asarray(s, dtype=np.int64), 1).astype(np.uint64)
    return int(np.abs((ph - Gt * np.uint64(mu)).astype(np.int64)).max()), recorded


def test_lattice_noise_is_tracked_and_flooded(lsk):
    rng = make_rng(20)
    b = CircuitBuilder(2)
    w = b.input_wires()
    c = b.build(b.and_(w[0:1], w[1:2]))
    ct = fhe.fhe_enc(lsk, "11", rng)
    worst, flood = fhe.gsw_noise_bounds(c, fhe.FRESH_NOISE)
    assert flood >= (1 << 40) * worst
    out = fhe.fhe_eval(c, ct, rng)
    actual, recorded = _actual_noise(lsk.material, out, 1)
    assert actual <= recorded == worst + flood
    # the pre-flooding noise stays under the tracked bound
    mats, _ = fhe._gsw_unpack(ct)
    pre = fhe._gsw_mul(mats[0], mats[1])
    e = (fhe._phase(lsk.material, pre) - fhe._G @ np.append(-lsk.material.astype(np.int64), 1).astype(np.uint64))
    assert int(np.abs(e.astype(np.int64)).max()) <= worst


def test_lattice_depth_limit(lsk):
    b = CircuitBuilder(2)
    w = b.input_wires()
    acc = w[0:1]
    for _ in range(6):
        acc = b.and_(w[1:2], acc)  # noise grows with the right operand
    with pytest.raises(fhe.LevelExceeded):
        fhe.fhe_eval(b.build(acc), fhe.fhe_enc(lsk, "11"))


def test_lattice_sim_decrypts_under_nothing_but_extracts():
    ct = fhe.fhe_sim(LAM, "101", backend=fhe.LATTICE, rng=make_rng(21))
    assert fhe.fhe_extract(ct).tolist() == [1, 0, 1]
