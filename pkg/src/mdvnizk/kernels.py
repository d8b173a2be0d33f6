"""Hot inner loops: bit-sliced circuit evaluation, plain and 3-party shared.

Every wire carries ``W`` 64-bit words, so one pass evaluates up to ``64*W``
independent lanes (inputs for plain evaluation, proof rounds for the MPC
kernels). The numba kernels walk gates in order; the fallback walks the
circuit level by level with vectorized numpy. Set ``MDVNIZK_DISABLE_NUMBA=1``
to force the fallback. Both paths are bit-identical.
"""
from __future__ import annotations

import os

import numpy as np

OP_AND = 1
OP_XOR = 2
OP_NOT = 3
OP_CONST0 = 4
OP_CONST1 = 5

ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)

_disabled = os.environ.get("MDVNIZK_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}
try:
    if _disabled:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def using_numba() -> bool:
    return HAVE_NUMBA


# -- numba path ----------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _eval_plain_nb(ops, a, b, n_in, x):
        n_g = ops.shape[0]
        W = x.shape[1]
        w = np.zeros((n_in + n_g, W), dtype=np.uint64)
        w[:n_in] = x
        ones = np.uint64(0xFFFFFFFFFFFFFFFF)
        for g in range(n_g):
            o = ops[g]
            t = n_in + g
            if o == 2:
                for l in range(W):
                    w[t, l] = w[a[g], l] ^ w[b[g], l]
            elif o == 1:
                for l in range(W):
                    w[t, l] = w[a[g], l] & w[b[g], l]
            elif o == 3:
                for l in range(W):
                    w[t, l] = w[a[g], l] ^ ones
            elif o == 5:
                for l in range(W):
                    w[t, l] = ones
        return w

    @njit(cache=True)
    def _mpc_eval_nb(ops, a, b, n_in, xs, tapes):
        n_g = ops.shape[0]
        W = xs.shape[2]
        w = np.zeros((3, n_in + n_g, W), dtype=np.uint64)
        w[:, :n_in] = xs
        ones = np.uint64(0xFFFFFFFFFFFFFFFF)
        r = 0
        for g in range(n_g):
            o = ops[g]
            t = n_in + g
            if o == 2:
                for p in range(3):
                    for l in range(W):
                        w[p, t, l] = w[p, a[g], l] ^ w[p, b[g], l]
            elif o == 1:
                for p in range(3):
                    q = (p + 1) % 3
                    for l in range(W):
                        xa = w[p, a[g], l]
                        xb = w[p, b[g], l]
                        ya = w[q, a[g], l]
                        yb = w[q, b[g], l]
                        w[p, t, l] = (xa & xb) ^ (ya & xb) ^ (xa & yb) ^ tapes[p, r, l] ^ tapes[q, r, l]
                r += 1
            elif o == 3:
                for l in range(W):
                    w[0, t, l] = w[0, a[g], l] ^ ones
                    w[1, t, l] = w[1, a[g], l]
                    w[2, t, l] = w[2, a[g], l]
            elif o == 5:
                for l in range(W):
                    w[0, t, l] = ones
        return w

    @njit(cache=True)
    def _mpc_recompute_nb(ops, a, b, n_in, xa, xb, ta, tb, view_b, mask_a0, mask_b0):
        n_g = ops.shape[0]
        W = xa.shape[1]
        wa = np.zeros((n_in + n_g, W), dtype=np.uint64)
        wb = np.zeros((n_in + n_g, W), dtype=np.uint64)
        wa[:n_in] = xa
        wb[:n_in] = xb
        r = 0
        for g in range(n_g):
            o = ops[g]
            t = n_in + g
            if o == 2:
                for l in range(W):
                    wa[t, l] = wa[a[g], l] ^ wa[b[g], l]
                    wb[t, l] = wb[a[g], l] ^ wb[b[g], l]
            elif o == 1:
                for l in range(W):
                    p0 = wa[a[g], l]
                    p1 = wa[b[g], l]
                    q0 = wb[a[g], l]
                    q1 = wb[b[g], l]
                    wa[t, l] = (p0 & p1) ^ (q0 & p1) ^ (p0 & q1) ^ ta[r, l] ^ tb[r, l]
                    wb[t, l] = view_b[r, l]
                r += 1
            elif o == 3:
                for l in range(W):
                    wa[t, l] = wa[a[g], l] ^ mask_a0[l]
                    wb[t, l] = wb[a[g], l] ^ mask_b0[l]
            elif o == 5:
                for l in range(W):
                    wa[t, l] = mask_a0[l]
                    wb[t, l] = mask_b0[l]
        return wa, wb

    @njit(cache=True)
    def _levels_nb(ops, a, b, n_in):
        n_g = ops.shape[0]
        lev = np.zeros(n_in + n_g, dtype=np.int64)
        out = np.zeros(n_g, dtype=np.int64)
        for g in range(n_g):
            o = ops[g]
            if o == 1 or o == 2:
                m = lev[a[g]]
                if lev[b[g]] > m:
                    m = lev[b[g]]
                v = m + 1
            elif o == 3:
                v = lev[a[g]] + 1
            else:
                v = 1
            lev[n_in + g] = v
            out[g] = v
        return out


# -- numpy fallback ------------------------------------------------------------

def _levels_py(ops, a, b, n_in):
    n_g = ops.shape[0]
    lev = [0] * (n_in + n_g)
    out = np.zeros(n_g, dtype=np.int64)
    opl, al, bl = ops.tolist(), a.tolist(), b.tolist()
    for g in range(n_g):
        o = opl[g]
        if o == OP_AND or o == OP_XOR:
            v = max(lev[al[g]], lev[bl[g]]) + 1
        elif o == OP_NOT:
            v = lev[al[g]] + 1
        else:
            v = 1
        lev[n_in + g] = v
        out[g] = v
    return out


def gate_levels(ops, a, b, n_in) -> np.ndarray:
    if HAVE_NUMBA:
        return _levels_nb(ops, a, b, n_in)
    return _levels_py(ops, a, b, n_in)


class LevelPlan:
    """Gates grouped by (depth, opcode) for the vectorized fallback."""

    def __init__(self, ops, a, b, n_in):
        levels = gate_levels(ops, a, b, n_in)
        and_rank = np.cumsum(ops == OP_AND) - 1
        order = np.lexsort((ops, levels))
        lv, op = levels[order], ops[order]
        cut = np.flatnonzero((lv[1:] != lv[:-1]) | (op[1:] != op[:-1])) + 1
        self.groups = []
        for chunk in np.split(order, cut):
            if chunk.size == 0:
                continue
            self.groups.append((int(ops[chunk[0]]), chunk + n_in, a[chunk], b[chunk], and_rank[chunk]))


_plans: dict[int, tuple] = {}


def _plan(ops, a, b, n_in) -> LevelPlan:
    key = (id(ops), ops.shape[0], n_in)
    hit = _plans.get(key[0])
    if hit is not None and hit[0] is ops and hit[1] == key:
        return hit[2]
    plan = LevelPlan(ops, a, b, n_in)
    if len(_plans) > 32:
        _plans.clear()
    _plans[key[0]] = (ops, key, plan)
    return plan


def _eval_plain_np(ops, a, b, n_in, x):
    W = x.shape[1]
    w = np.zeros((n_in + ops.shape[0], W), dtype=np.uint64)
    w[:n_in] = x
    for op, out, ga, gb, _ in _plan(ops, a, b, n_in).groups:
        if op == OP_XOR:
            w[out] = w[ga] ^ w[gb]
        elif op == OP_AND:
            w[out] = w[ga] & w[gb]
        elif op == OP_NOT:
            w[out] = ~w[ga]
        elif op == OP_CONST1:
            w[out] = ALL_ONES
    return w


def _mpc_eval_np(ops, a, b, n_in, xs, tapes):
    W = xs.shape[2]
    w = np.zeros((3, n_in + ops.shape[0], W), dtype=np.uint64)
    w[:, :n_in] = xs
    for op, out, ga, gb, rk in _plan(ops, a, b, n_in).groups:
        if op == OP_XOR:
            w[:, out] = w[:, ga] ^ w[:, gb]
        elif op == OP_AND:
            x = w[:, ga]
            y = w[:, gb]
            x1 = np.roll(x, -1, axis=0)
            y1 = np.roll(y, -1, axis=0)
            t = tapes[:, rk]
            w[:, out] = (x & y) ^ (x1 & y) ^ (x & y1) ^ t ^ np.roll(t, -1, axis=0)
        elif op == OP_NOT:
            w[0, out] = ~w[0, ga]
            w[1:, out] = w[1:, ga]
        elif op == OP_CONST1:
            w[0, out] = ALL_ONES
    return w


def _mpc_recompute_np(ops, a, b, n_in, xa, xb, ta, tb, view_b, mask_a0, mask_b0):
    W = xa.shape[1]
    wa = np.zeros((n_in + ops.shape[0], W), dtype=np.uint64)
    wb = np.zeros_like(wa)
    wa[:n_in] = xa
    wb[:n_in] = xb
    for op, out, ga, gb, rk in _plan(ops, a, b, n_in).groups:
        if op == OP_XOR:
            wa[out] = wa[ga] ^ wa[gb]
            wb[out] = wb[ga] ^ wb[gb]
        elif op == OP_AND:
            p0, p1, q0, q1 = wa[ga], wa[gb], wb[ga], wb[gb]
            wa[out] = (p0 & p1) ^ (q0 & p1) ^ (p0 & q1) ^ ta[rk] ^ tb[rk]
            wb[out] = view_b[rk]
        elif op == OP_NOT:
            wa[out] = wa[ga] ^ mask_a0
            wb[out] = wb[ga] ^ mask_b0
        elif op == OP_CONST1:
            wa[out] = mask_a0
            wb[out] = mask_b0
    return wa, wb


# -- dispatch ------------------------------------------------------------------

def eval_plain(ops, a, b, n_in, x, backend: str | None = None):
    """Evaluate on ``x`` of shape (n_in, W); returns all wires (n_wires, W)."""
    if _pick(backend) == "numba":
        return _eval_plain_nb(ops, a, b, n_in, x)
    return _eval_plain_np(ops, a, b, n_in, x)


def mpc_eval(ops, a, b, n_in, xs, tapes, backend: str | None = None):
    """Three-party evaluation; ``xs`` (3, n_in, W), ``tapes`` (3, n_and, W)."""
    if _pick(backend) == "numba":
        return _mpc_eval_nb(ops, a, b, n_in, xs, tapes)
    return _mpc_eval_np(ops, a, b, n_in, xs, tapes)


def mpc_recompute(ops, a, b, n_in, xa, xb, ta, tb, view_b, mask_a0, mask_b0, backend: str | None = None):
    """Recompute the two opened parties' wires from their seeds and B's view."""
    if _pick(backend) == "numba":
        return _mpc_recompute_nb(ops, a, b, n_in, xa, xb, ta, tb, view_b, mask_a0, mask_b0)
    return _mpc_recompute_np(ops, a, b, n_in, xa, xb, ta, tb, view_b, mask_a0, mask_b0)


def _pick(backend: str | None) -> str:
    if backend is None:
        return "numba" if HAVE_NUMBA else "numpy"
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {backend!r}")
    return backend


# -- lane packing ----------------------------------------------------------------

def pack_lanes(bits: np.ndarray) -> np.ndarray:
    """(L, N) 0/1 array -> (N, W) uint64 with lane j in bit j%64 of word j//64."""
    bits = np.asarray(bits, dtype=np.uint8)
    L, N = bits.shape
    W = max(1, -(-L // 64))
    padded = np.zeros((N, W * 64), dtype=np.uint8)
    padded[:, :L] = bits.T
    packed = np.packbits(padded, axis=1, bitorder="little")  # (N, W*8)
    return packed.view("<u8").astype(np.uint64).reshape(N, W)


def unpack_lanes(words: np.ndarray, L: int) -> np.ndarray:
    """Inverse of :func:`pack_lanes`; returns (L, N) uint8."""
    words = np.ascontiguousarray(words, dtype="<u8")
    N, W = words.shape
    bits = np.unpackbits(words.view(np.uint8).reshape(N, W * 8), axis=1, bitorder="little")
    return np.ascontiguousarray(bits[:, :L].T)


def lane_mask(flags) -> np.ndarray:
    """Words with bit j set iff ``flags[j]`` is true."""
    flags = np.asarray(flags, dtype=np.uint8).reshape(-1, 1)
    return pack_lanes(flags)[0]
