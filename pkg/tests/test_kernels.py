import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdvnizk import kernels
from mdvnizk.kernels import ALL_ONES, lane_mask, mpc_eval, mpc_recompute, pack_lanes, unpack_lanes
from mdvnizk.rng import make_rng

from oracles import random_gates

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba disabled")


def arrays(gates):
    ops = np.array([g[0] for g in gates], np.uint8)
    a = np.array([g[1] for g in gates], np.int64)
    b = np.array([g[2] for g in gates], np.int64)
    return ops, a, b


def case(seed, n_in=6, n_gates=80, W=2):
    rng = make_rng(seed, "kernel-case")
    ops, a, b = arrays(random_gates(rng, n_in, n_gates))
    n_and = int((ops == kernels.OP_AND).sum())
    x = rng.integers(0, 2**63, size=(n_in, W), dtype=np.uint64)
    xs = rng.integers(0, 2**63, size=(3, n_in, W), dtype=np.uint64)
    tapes = rng.integers(0, 2**63, size=(3, n_and, W), dtype=np.uint64)
    return ops, a, b, n_in, x, xs, tapes


@given(st.integers(0, 2**31), st.integers(1, 130))
def test_pack_unpack_round_trip(seed, L):
    bits = make_rng(seed, "pack").integers(0, 2, size=(L, 7)).astype(np.uint8)
    assert np.array_equal(unpack_lanes(pack_lanes(bits), L), bits)


def test_lane_mask():
    m = lane_mask([1, 0, 1] + [0] * 61 + [1])  # lane 64 is bit 0 of word 1
    assert m.tolist() == [0b101, 1]


@pytest.mark.parametrize("seed", range(5))
def test_mpc_shares_reconstruct_plain_wires(seed):
    ops, a, b, n_in, _, xs, tapes = case(seed)
    shares = mpc_eval(ops, a, b, n_in, xs, tapes, backend="numpy")
    plain = kernels.eval_plain(ops, a, b, n_in, xs[0] ^ xs[1] ^ xs[2], backend="numpy")
    assert np.array_equal(shares[0] ^ shares[1] ^ shares[2], plain)


@pytest.mark.parametrize("seed", range(5))
def test_recompute_matches_two_party_views(seed):
    ops, a, b, n_in, _, xs, tapes = case(seed)
    w = mpc_eval(ops, a, b, n_in, xs, tapes, backend="numpy")
    and_out = n_in + np.flatnonzero(ops == kernels.OP_AND)
    W = xs.shape[2]
    ones, zeros = np.full(W, ALL_ONES), np.zeros(W, np.uint64)
    wa, wb = mpc_recompute(ops, a, b, n_in, xs[0], xs[1], tapes[0], tapes[1], w[1, and_out], ones, zeros,
                           backend="numpy")
    assert np.array_equal(wa, w[0]) and np.array_equal(wb, w[1])


@needs_numba
@given(st.integers(0, 2**31))
def test_numba_matches_numpy(seed):
    ops, a, b, n_in, x, xs, tapes = case(seed)
    assert np.array_equal(kernels.eval_plain(ops, a, b, n_in, x, backend="numba"),
                          kernels.eval_plain(ops, a, b, n_in, x, backend="numpy"))
    assert np.array_equal(mpc_eval(ops, a, b, n_in, xs, tapes, backend="numba"),
                          mpc_eval(ops, a, b, n_in, xs, tapes, backend="numpy"))
    w = mpc_eval(ops, a, b, n_in, xs, tapes, backend="numpy")
    and_out = n_in + np.flatnonzero(ops == kernels.OP_AND)
    W = xs.shape[2]
    args = (ops, a, b, n_in, xs[1], xs[2], tapes[1], tapes[2], w[2, and_out], np.zeros(W, np.uint64),
            np.zeros(W, np.uint64))
    for got, want in zip(mpc_recompute(*args, backend="numba"), mpc_recompute(*args, backend="numpy")):
        assert np.array_equal(got, want)


def test_unknown_backend():
    ops, a, b, n_in, x, _, _ = case(0)
    with pytest.raises(ValueError):
        kernels.eval_plain(ops, a, b, n_in, x, backend="cuda")


def test_env_flag_selects_numpy_fallback():
    code = ("from mdvnizk import kernels, protocol as p; from mdvnizk.sigma import make_backend;"
            "from mdvnizk.instances import get; from mdvnizk.rng import make_rng;"
            "assert not kernels.HAVE_NUMBA;"
            "r = make_rng(1); crs = p.setup(32, r, 4); pk, sk = p.vsetup(crs, r); i = get('K3');"
            "b = make_backend('ham', 32, 2);"
            "print(p.verify(crs, pk, sk, i.x, p.prove(crs, pk, i.x, i.wit, b, r), b))")
    env = dict(os.environ, MDVNIZK_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=600)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "True"
