import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdvnizk import qsim
from mdvnizk.bits import DecodeError
from mdvnizk.rng import make_rng, random_bits

from oracles import partial_trace_loops, pauli_pad, trace_distance_eig

seeds = st.integers(0, 2**31)


@given(seeds, st.integers(1, 3))
def test_qotp_matches_explicit_paulis(seed, n):
    rng = make_rng(seed)
    s = qsim.random_state(n, rng)
    a, b = random_bits(rng, n), random_bits(rng, n)
    U = pauli_pad(a, b)
    assert np.abs(qsim.apply_qotp(s, a, b).rho - U @ s.rho @ U.conj().T).max() < 1e-12


@given(seeds, st.integers(1, 3))
def test_qotp_round_trip(seed, n):
    rng = make_rng(seed)
    s = qsim.random_state(n, rng)
    a, b = random_bits(rng, n), random_bits(rng, n)
    assert np.abs(qsim.apply_qotp(qsim.apply_qotp(s, a, b), a, b).rho - s.rho).max() < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pad_average_is_maximally_mixed(n):
    rng = make_rng(n, "pad-avg")
    for _ in range(3):
        avg = qsim.pad_average(qsim.random_state(n, rng))
        assert np.abs(avg.rho - np.eye(1 << n) / (1 << n)).max() < 1e-6


def test_bell_marginal():
    for q in (0, 1):
        assert np.abs(qsim.partial_trace(qsim.bell_state(), [q]).rho - np.eye(2) / 2).max() < 1e-9


@given(seeds, st.integers(1, 4), st.data())
def test_partial_trace_matches_index_sums(seed, n, data):
    s = qsim.random_state(n, make_rng(seed))
    keep = data.draw(st.lists(st.integers(0, n - 1), unique=True, min_size=1, max_size=n).map(sorted))
    got = qsim.partial_trace(s, keep).rho
    assert np.abs(got - partial_trace_loops(s.rho, n, keep)).max() < 1e-12


def test_partial_trace_of_pure_3_qubit_state_has_unit_trace():
    rng = make_rng(1)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = qsim.pure(v)
    for keep in ([0], [1, 2], [0, 2]):
        assert abs(np.trace(qsim.partial_trace(s, keep).rho) - 1) < 1e-9


def test_partial_trace_bad_qubits():
    with pytest.raises(qsim.StateError):
        qsim.partial_trace(qsim.bell_state(), [2])
    with pytest.raises(qsim.StateError):
        qsim.partial_trace(qsim.bell_state(), [0, 0])


def test_trace_distance_basics():
    zero, one = qsim.basis([0]), qsim.basis([1])
    assert qsim.trace_distance(zero, zero) == pytest.approx(0, abs=1e-12)
    assert qsim.trace_distance(zero, one) == pytest.approx(1)


def test_trace_distance_triangle_inequality():
    rng = make_rng(2, "triangle")
    for _ in range(100):
        n = int(rng.integers(1, 3))
        r, s, t = (qsim.random_state(n, rng) for _ in range(3))
        assert qsim.trace_distance(r, s) == pytest.approx(trace_distance_eig(r.rho, s.rho), abs=1e-12)
        assert qsim.trace_distance(r, t) <= qsim.trace_distance(r, s) + qsim.trace_distance(s, t) + 1e-12


def test_invariant_checks():
    with pytest.raises(qsim.StateError):
        qsim.QState(1, np.array([[1, 0], [0, 1]]))  # trace 2
    with pytest.raises(qsim.StateError):
        qsim.QState(1, np.array([[0.5, 1j], [0, 0.5]]))  # not Hermitian
    with pytest.raises(qsim.StateError):
        qsim.QState(1, np.array([[1.5, 0], [0, -0.5]]))  # negative eigenvalue
    with pytest.raises(qsim.StateError):
        qsim.QState(7, np.eye(128) / 128)


def test_serialization():
    s = qsim.random_state(2, make_rng(3))
    t = qsim.QState.from_bytes(s.to_bytes())
    assert np.array_equal(t.rho, s.rho)
    with pytest.raises(DecodeError):
        qsim.QState.from_bytes(b"QST1\x01" + np.eye(2, dtype="<c16").tobytes())


def test_permute_and_embed():
    s = qsim.tensor(qsim.basis([0]), qsim.basis([1]))
    assert np.allclose(qsim.permute_qubits(s, [1, 0]).rho, qsim.tensor(qsim.basis([1]), qsim.basis([0])).rho)
    e = qsim.embed_marginal(qsim.basis([1]), [2], 3)
    assert np.allclose(qsim.partial_trace(e, [2]).rho, qsim.basis([1]).rho)
    assert np.allclose(qsim.partial_trace(e, [0, 1]).rho, np.eye(4) / 4)


def test_random_walk_keeps_invariants():
    from mdvnizk.experiments import qsim_checks
    out = qsim_checks(2000, seed=4)
    assert out["violations"] == 0
    assert out["pad_error"] < 1e-6 and out["bell_error"] < 1e-9
