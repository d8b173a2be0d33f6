"""Non-interactive MPC-in-the-head proofs (ZKB++-style, three parties).

The prover secret-shares the witness three ways and runs the relation
circuit as a 3-party protocol in its head, ``t`` times in parallel (the
rounds are packed into the bit lanes of the kernels). It commits to every
party's view, derives one challenge trit per round from the oracle, and
opens two of the three parties per round.

Per round and party ``p`` the tape is ``SHAKE-128("mdvnizk/tape" | round u32 |
p u8 | seed)`` cut to ``n_in + n_and`` bits: parties 0 and 1 take their input
share from the first ``n_in`` bits, party 2's share ``x2`` is explicit. The
commitment is ``SHA-256("mdvnizk/view" | seed | [x2] | packed AND outputs)``.
The challenge query is SHA-256 over the crs bytes, the statement, all
commitments and all output shares, in round then party order.

Proof ``NZK1``::

    b"NZK1" | rel u8 | t u16 | lam u16 | n_in u32 | n_and u32 | n_out u32
    per round: e u8 | seed_e | seed_e+1 | x2 | AND outputs of party e+1
               | commitment of party e+2 (32 bytes)

Seeds are lam/8 bytes. ``x2`` is all zero when party 2 is not opened (e = 0),
so every proof for a given circuit has the same length,
``21 + t * (1 + lam/4 + n_in/8 + n_and/8 + 32)`` with divisions rounded up.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..bits import DecodeError, Reader, bits_to_bytes, bytes_to_bits, u16, u32
from ..circuits import Circuit
from ..kernels import OP_AND
from ..rng import ensure
from .oracle import ProgrammableOracle
from .relations import Relation, Statement, relation_for, witness_bits

MAGIC = b"NZK1"
COM = 32


class FalseStatement(ValueError):
    """Refusing to prove: the witness does not satisfy the relation."""


def default_rounds(lam: int) -> int:
    return max(16, lam // 8)


def _tape(seed: bytes, rnd: int, party: int, nbits: int) -> np.ndarray:
    raw = hashlib.shake_128(b"mdvnizk/tape" + u32(rnd) + bytes([party]) + seed).digest(-(-nbits // 8))
    return bytes_to_bits(raw, nbits)


def _view_commit(seed: bytes, x2: np.ndarray | None, view: np.ndarray) -> bytes:
    h = hashlib.sha256(b"mdvnizk/view" + seed)
    if x2 is not None:
        h.update(bits_to_bytes(x2))
    h.update(bits_to_bytes(view))
    return h.digest()


def _query(crs_data: bytes, stmt: bytes, coms, yshares) -> bytes:
    h = hashlib.sha256(b"mdvnizk/fs" + u32(len(crs_data)) + crs_data + u32(len(stmt)) + stmt)
    for round_coms, round_y in zip(coms, yshares):
        for c in round_coms:
            h.update(c)
        for y in round_y:
            h.update(bits_to_bytes(y))
    return h.digest()


@dataclass(frozen=True)
class _Shape:
    n_in: int
    n_and: int
    n_out: int
    and_wires: np.ndarray
    outputs: np.ndarray


def _shape(c: Circuit) -> _Shape:
    and_wires = c.inputs + np.flatnonzero(c.ops == OP_AND)
    return _Shape(c.inputs, int(and_wires.size), c.n_outputs, and_wires, c.outputs)


def _split_tape(tape: np.ndarray, n_in: int):
    return tape[:n_in], tape[n_in:]


@dataclass
class _Round:
    e: int
    seed_a: bytes
    seed_b: bytes
    x2: np.ndarray | None
    view_b: np.ndarray
    com_c: bytes


def _recompute(c: Circuit, sh: _Shape, rounds: list[_Round], kernel=None):
    """Opened parties' views and output shares for every round."""
    t = len(rounds)
    nbits = sh.n_in + sh.n_and
    xa, xb, ta, tb = [], [], [], []
    for j, rd in enumerate(rounds):
        A, B = rd.e, (rd.e + 1) % 3
        for party, seed, xs, ts in ((A, rd.seed_a, xa, ta), (B, rd.seed_b, xb, tb)):
            tape = _tape(seed, j, party, nbits)
            xin, tand = _split_tape(tape, sh.n_in)
            xs.append(rd.x2 if party == 2 else xin)
            ts.append(tand)
    es = np.array([rd.e for rd in rounds])
    wa, wb = kernels.mpc_recompute(
        c.ops, c.a, c.b, c.inputs,
        kernels.pack_lanes(np.array(xa).reshape(t, sh.n_in)), kernels.pack_lanes(np.array(xb).reshape(t, sh.n_in)),
        kernels.pack_lanes(np.array(ta).reshape(t, sh.n_and)), kernels.pack_lanes(np.array(tb).reshape(t, sh.n_and)),
        kernels.pack_lanes(np.array([rd.view_b for rd in rounds]).reshape(t, sh.n_and)),
        kernels.lane_mask(es == 0), kernels.lane_mask(es == 2), backend=kernel)
    view_a = kernels.unpack_lanes(wa[sh.and_wires], t)
    ya = kernels.unpack_lanes(wa[sh.outputs], t)
    yb = kernels.unpack_lanes(wb[sh.outputs], t)
    return view_a, ya, yb


def _assemble(rounds, view_a, ya, yb, y):
    """Commitments and output shares in party order for each round."""
    coms, shares = [], []
    for j, rd in enumerate(rounds):
        A, B, Cp = rd.e, (rd.e + 1) % 3, (rd.e + 2) % 3
        c = [b""] * 3
        s = [None] * 3
        c[A] = _view_commit(rd.seed_a, rd.x2 if A == 2 else None, view_a[j])
        c[B] = _view_commit(rd.seed_b, rd.x2 if B == 2 else None, rd.view_b)
        c[Cp] = rd.com_c
        s[A], s[B] = ya[j], yb[j]
        s[Cp] = (y ^ ya[j] ^ yb[j]).astype(np.uint8)
        coms.append(c)
        shares.append(s)
    return coms, shares


def _encode(rel: int, lam: int, sh: _Shape, rounds) -> bytes:
    out = [MAGIC, bytes([rel]), u16(len(rounds)), u16(lam), u32(sh.n_in), u32(sh.n_and), u32(sh.n_out)]
    for rd in rounds:
        out += [bytes([rd.e]), rd.seed_a, rd.seed_b]
        x2 = rd.x2 if rd.x2 is not None else np.zeros(sh.n_in, np.uint8)
        out += [bits_to_bytes(x2), bits_to_bytes(rd.view_b), rd.com_c]
    return b"".join(out)


def _decode(data: bytes):
    r = Reader(data)
    r.expect(MAGIC)
    rel = r.u8()
    t = r.u16()
    lam = r.u16()
    sh = (r.u32(), r.u32(), r.u32())
    n_in, n_and, _ = sh
    sb = lam // 8
    rounds = []
    for _ in range(t):
        e = r.u8()
        if e > 2:
            raise DecodeError("challenge trit out of range")
        seed_a, seed_b = r.take(sb), r.take(sb)
        x2 = bytes_to_bits(r.take(-(-n_in // 8)), n_in)
        if e == 0:
            if x2.any():
                raise DecodeError("unused input share must be zero")
            x2 = None
        view_b = bytes_to_bits(r.take(-(-n_and // 8)), n_and)
        rounds.append(_Round(e, seed_a, seed_b, x2, view_b, r.take(COM)))
    r.finish()
    return rel, t, lam, sh, rounds


def proof_length(t: int, lam: int, n_in: int, n_and: int) -> int:
    return 21 + t * (1 + 2 * (lam // 8) + -(-n_in // 8) + -(-n_and // 8) + COM)


def prove(crs, stmt: Statement, wit, rng=None, kernel=None, relation: Relation | None = None) -> bytes:
    rng = ensure(rng)
    rel = relation or relation_for(stmt)
    w = witness_bits(rel, wit)
    if w is None:
        raise FalseStatement("witness does not fit the relation")
    c = rel.circuit
    sh = _shape(c)
    t, lam = crs.rounds, crs.lam
    sb = lam // 8
    nbits = sh.n_in + sh.n_and
    seeds = [[rng.bytes(sb) for _ in range(3)] for _ in range(t)]
    xs = np.zeros((3, t, sh.n_in), np.uint8)
    tapes = np.zeros((3, t, sh.n_and), np.uint8)
    for j in range(t):
        for p in range(3):
            xin, tand = _split_tape(_tape(seeds[j][p], j, p, nbits), sh.n_in)
            xs[p, j] = xin
            tapes[p, j] = tand
        xs[2, j] = w ^ xs[0, j] ^ xs[1, j]
    wires = kernels.mpc_eval(c.ops, c.a, c.b, c.inputs,
                             np.stack([kernels.pack_lanes(xs[p]) for p in range(3)]),
                             np.stack([kernels.pack_lanes(tapes[p]) for p in range(3)]), backend=kernel)
    views = [kernels.unpack_lanes(wires[p][sh.and_wires], t) for p in range(3)]
    ys = [kernels.unpack_lanes(wires[p][sh.outputs], t) for p in range(3)]
    y = ys[0] ^ ys[1] ^ ys[2]
    if not all(np.array_equal(y[j], rel.expected) for j in range(t)):
        raise FalseStatement("witness does not satisfy the relation")
    coms = [[_view_commit(seeds[j][p], xs[2, j] if p == 2 else None, views[p][j]) for p in range(3)]
            for j in range(t)]
    shares = [[ys[p][j] for p in range(3)] for j in range(t)]
    e = crs.oracle.trits(_query(crs.data, stmt.to_bytes(), coms, shares), t)
    rounds = []
    for j, ej in enumerate(e):
        A, B, Cp = ej, (ej + 1) % 3, (ej + 2) % 3
        rounds.append(_Round(ej, seeds[j][A], seeds[j][B], xs[2, j] if 2 in (A, B) else None,
                             views[B][j], coms[j][Cp]))
    return _encode(stmt.rel, lam, sh, rounds)


def verify(crs, stmt: Statement, proof: bytes, kernel=None, relation: Relation | None = None) -> bool:
    try:
        rel_id, t, lam, (n_in, n_and, n_out), rounds = _decode(proof)
        if rel_id != stmt.rel or t != crs.rounds or lam != crs.lam or t == 0:
            return False
        rel = relation or relation_for(stmt)
    except (DecodeError, ValueError):
        return False
    c = rel.circuit
    sh = _shape(c)
    if (n_in, n_and, n_out) != (sh.n_in, sh.n_and, sh.n_out):
        return False
    view_a, ya, yb = _recompute(c, sh, rounds, kernel)
    coms, shares = _assemble(rounds, view_a, ya, yb, rel.expected)
    e = crs.oracle.trits(_query(crs.data, stmt.to_bytes(), coms, shares), t)
    return e == [rd.e for rd in rounds]


def _sim_rounds(c: Circuit, sh: _Shape, es, lam: int, rng):
    sb = lam // 8
    rounds = []
    for e in es:
        e = int(e)
        x2 = rng.integers(0, 2, sh.n_in, dtype=np.uint8) if e != 0 else None
        rounds.append(_Round(e, rng.bytes(sb), rng.bytes(sb), x2,
                             rng.integers(0, 2, sh.n_and, dtype=np.uint8), rng.bytes(COM)))
    return rounds


def sim_prove(crs, oracle: ProgrammableOracle, stmt: Statement, rng=None, kernel=None,
              relation: Relation | None = None) -> bytes:
    """A proof for ``stmt`` without a witness, made to verify by programming the oracle."""
    rng = ensure(rng)
    rel = relation or relation_for(stmt)
    c = rel.circuit
    sh = _shape(c)
    es = rng.integers(0, 3, crs.rounds)
    rounds = _sim_rounds(c, sh, es, crs.lam, rng)
    view_a, ya, yb = _recompute(c, sh, rounds, kernel)
    coms, shares = _assemble(rounds, view_a, ya, yb, rel.expected)
    oracle.program_trits(_query(crs.data, stmt.to_bytes(), coms, shares), [int(v) for v in es])
    return _encode(stmt.rel, crs.lam, sh, rounds)


def search_forgery(crs, stmt: Statement, queries: int, rng=None, kernel=None) -> tuple[bytes | None, int]:
    """Witness-less grinding: guess every challenge trit, hope the oracle agrees.

    Per round it precomputes a simulated transcript for each of the three
    possible trits, then each attempt recombines them under a fresh guess and
    costs one oracle query. Success probability is 3**-t per query. Returns
    (accepting proof or None, queries used).
    """
    rng = ensure(rng)
    rel = relation_for(stmt)
    c = rel.circuit
    sh = _shape(c)
    t = crs.rounds
    pools = []
    for e in range(3):
        rounds = _sim_rounds(c, sh, [e] * t, crs.lam, rng)
        view_a, ya, yb = _recompute(c, sh, rounds, kernel)
        coms, shares = _assemble(rounds, view_a, ya, yb, rel.expected)
        pools.append((rounds, coms, shares))
    sb = stmt.to_bytes()
    for q in range(1, queries + 1):
        guess = [int(v) for v in rng.integers(0, 3, t)]
        coms = [pools[g][1][j] for j, g in enumerate(guess)]
        shares = [pools[g][2][j] for j, g in enumerate(guess)]
        if crs.oracle.trits(_query(crs.data, sb, coms, shares), t) == guess:
            rounds = [pools[g][0][j] for j, g in enumerate(guess)]
            return _encode(stmt.rel, crs.lam, sh, rounds), q
    return None, queries
