from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdvnizk.bits import DecodeError
from mdvnizk.circuits import (ArityError, Circuit, CircuitBuilder, CircuitError, UnsupportedBackend,
                              build_const_circuit, build_prover_circuit, canonical_decode, canonical_encode,
                              eval_batch, eval_circuit, normalize)
from mdvnizk.primitives.prf import prf_stream
from mdvnizk.rng import make_rng, random_bits
from mdvnizk.sigma import hamiltonicity as H, make_backend

from oracles import all_inputs, eval_recursive, random_gates

GOLDEN = Path(__file__).parent / "golden"


def from_gates(n_in, gates, outputs):
    ops = np.array([g[0] for g in gates], np.uint8)
    a = np.array([g[1] for g in gates], np.int64)
    b = np.array([g[2] for g in gates], np.int64)
    return Circuit(n_in, ops, a, b, np.array(outputs, np.int64))


def random_circuit(rng, n_in=8, n_gates=50, n_out=4):
    gates = random_gates(rng, n_in, n_gates)
    outs = rng.integers(0, n_in + n_gates, size=n_out).tolist()
    return gates, outs


def test_xor_truth_table():
    c = from_gates(2, [(2, 0, 1)], [2])
    assert [int(eval_circuit(c, x)[0]) for x in ("00", "01", "10", "11")] == [0, 1, 1, 0]


def test_const1_ignores_input():
    c = from_gates(3, [(5, 0, 0)], [3])
    assert all(eval_circuit(c, x).tolist() == [1] for x in all_inputs(3))


def test_arity_mismatch():
    c = from_gates(2, [(1, 0, 1)], [2])
    with pytest.raises(ArityError):
        eval_circuit(c, "1")


def test_rejects_forward_reference():
    with pytest.raises(CircuitError):
        from_gates(2, [(1, 0, 3), (2, 0, 1)], [3])
    with pytest.raises(CircuitError):
        from_gates(2, [(1, 0, 1)], [7])


def test_random_50_gate_circuit_truth_table():
    rng = make_rng(1, "truth-table")
    gates, outs = random_circuit(rng)
    c = from_gates(8, gates, outs)
    xs = np.array(all_inputs(8))
    got = eval_batch(c, xs)
    want = np.array([eval_recursive(8, gates, outs, x) for x in xs])
    assert np.array_equal(got, want)


def test_eval_matches_recursive_oracle_on_1000_pairs():
    rng = make_rng(2, "eval-corpus")
    for _ in range(1000):
        n_in = int(rng.integers(1, 10))
        gates, outs = random_circuit(rng, n_in, int(rng.integers(1, 40)), int(rng.integers(1, 6)))
        x = random_bits(rng, n_in)
        assert eval_circuit(from_gates(n_in, gates, outs), x).tolist() == eval_recursive(n_in, gates, outs, x)


@given(st.integers(0, 2**32 - 1))
def test_numba_and_numpy_paths_agree(seed):
    from mdvnizk import kernels
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba disabled")
    rng = make_rng(seed, "paths")
    gates, outs = random_circuit(rng, 6, 60, 5)
    c = from_gates(6, gates, outs)
    xs = np.array(all_inputs(6))
    assert np.array_equal(eval_batch(c, xs, backend="numba"), eval_batch(c, xs, backend="numpy"))


def test_builder_constant_folding():
    b = CircuitBuilder(2)
    w = b.input_wires()
    one = CircuitBuilder.const([1])
    out = np.concatenate([b.and_(w[0:1], one), b.xor(w[1:2], w[1:2]), b.not_(CircuitBuilder.const([0]))])
    c = b.build(out)
    assert c.n_gates <= 2  # the CONST materializations only
    assert [eval_circuit(c, x).tolist() for x in ("10", "01")] == [[1, 0, 1], [0, 0, 1]]


def test_embed_matches_standalone():
    rng = make_rng(3, "embed")
    gates, outs = random_circuit(rng, 5, 30, 3)
    inner = from_gates(5, gates, outs)
    b = CircuitBuilder(3)
    w = b.input_wires()
    refs = np.concatenate([w, CircuitBuilder.const([1, 0])])
    c = b.build(b.embed(inner, refs))
    for x in all_inputs(3):
        assert eval_circuit(c, x).tolist() == eval_circuit(inner, np.concatenate([x, [1, 0]])).tolist()


# -- canonical encoding -------------------------------------------------------------

def test_golden_not_gate():
    b = CircuitBuilder(1)
    c = b.build(b.not_(b.input_wires()[0:1]))
    data = canonical_encode(c)
    assert data == (GOLDEN / "not_gate.cir").read_bytes()
    assert len(data) == 10


def test_round_trip_idempotent():
    rng = make_rng(4, "rt")
    for _ in range(50):
        gates, outs = random_circuit(rng, 6, 40, 3)
        enc = canonical_encode(from_gates(6, gates, outs))
        assert canonical_encode(canonical_decode(enc)) == enc


def test_decoded_circuit_computes_same_function():
    rng = make_rng(5, "rt-fn")
    gates, outs = random_circuit(rng, 6, 40, 3)
    c = from_gates(6, gates, outs)
    d = canonical_decode(canonical_encode(c))
    xs = np.array(all_inputs(6))
    assert np.array_equal(eval_batch(c, xs), eval_batch(d, xs))


def test_insertion_order_is_normalized():
    # the same two independent gates emitted in opposite orders
    c1 = from_gates(2, [(1, 0, 1), (2, 0, 1)], [2, 3])
    c2 = from_gates(2, [(2, 0, 1), (1, 0, 1)], [3, 2])
    assert canonical_encode(c1) == canonical_encode(c2)
    assert normalize(c1) == normalize(c2)


def test_encoding_injective_on_1000_distinct_circuits():
    rng = make_rng(6, "inj")
    seen = {}
    for _ in range(1000):
        n_in = int(rng.integers(1, 5))
        gates, outs = random_circuit(rng, n_in, int(rng.integers(1, 8)), int(rng.integers(1, 3)))
        c = normalize(from_gates(n_in, gates, outs))
        key = (c.inputs, c.ops.tobytes(), c.a.tobytes(), c.b.tobytes(), c.outputs.tobytes())
        enc = canonical_encode(c)
        assert seen.setdefault(enc, key) == key


@pytest.mark.parametrize("data", [b"", b"CIR1", b"XXXX\x01\x01\x03\x00\x01\x01", b"CIR1\x01\x01\x09\x00\x01\x01",
                                  b"CIR1\x01\x01\x03\x05\x01\x01", b"CIR1\x01\x01\x03\x00\x01\x01\x00"])
def test_decode_rejects_garbage(data):
    with pytest.raises(DecodeError):
        canonical_decode(data)


# -- protocol circuits ------------------------------------------------------------------

@pytest.mark.parametrize("m", [1, 8, 64])
def test_const_circuit_arity(m):
    gamma = random_bits(make_rng(m, "gamma"), m)
    c = build_const_circuit(gamma, 16)
    assert c.n_outputs == m
    rng = make_rng(m, "inputs")
    assert np.array_equal(eval_circuit(c, random_bits(rng, 16)), gamma)
    assert np.array_equal(eval_circuit(c, random_bits(rng, 16)), gamma)


def test_const_circuit_101():
    assert eval_circuit(build_const_circuit("101", 16), "0" * 16).tolist() == [1, 0, 1]


@pytest.fixture(scope="module")
def ham_case():
    backend = make_backend("ham", 32, 3)
    rng = make_rng(7, "prover-circuit")
    adj, order = H.random_hamiltonian_graph(5, rng)
    x, w = H.encode_graph(adj), H.encode_cycle(order)
    return backend, x, w, rng


def test_prover_circuit_is_canonical(ham_case):
    backend, x, w, rng = ham_case
    r = backend.sample_randomness(x, w, rng)
    e1 = canonical_encode(build_prover_circuit(x, r, backend))
    e2 = canonical_encode(build_prover_circuit(x, r.copy(), backend))
    assert e1 == e2
    r2 = backend.sample_randomness(x, w, rng)
    assert canonical_encode(build_prover_circuit(x, r2, backend)) != e1


def test_prover_circuit_composition(ham_case):
    backend, x, w, rng = ham_case
    for _ in range(100):
        r = backend.sample_randomness(x, w, rng)
        k = random_bits(rng, 32)
        c = build_prover_circuit(x, r, backend)
        beta = prf_stream(k, x, backend.challenge_length(x))
        assert np.array_equal(eval_circuit(c, k), backend.p3(x, beta, r))


def test_prover_circuit_errors(ham_case):
    backend, x, w, rng = ham_case
    with pytest.raises(ValueError):
        build_prover_circuit(x, np.zeros(3, np.uint8), backend)

    class Opaque:
        lam = 32
    with pytest.raises(UnsupportedBackend):
        build_prover_circuit(x, np.zeros(3, np.uint8), Opaque())
