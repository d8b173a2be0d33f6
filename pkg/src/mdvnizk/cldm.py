"""Toy Consistency-of-Local-Density-Matrices sigma protocol.

Instance ``CLD1``::

    b"CLD1" | n u8 | m u8 | per constraint: |S| u8 | S qubit bytes | delta f64 | blob QST1 target

Witness: a ``QST1`` state on n qubits (a classical description, so the prover
"clones" it freely for each repetition).

Per repetition the randomness holds, for each qubit q in order,
``a_q | b_q | salt_q`` (2 + lam bits). The first message is the padded state
plus a commitment to ``(a_q, b_q)`` per qubit. The challenge is
``ceil(log2 m)`` bits per repetition and selects constraint ``value mod m``;
the response opens the pads of that constraint's qubits, in ascending qubit
order, zero-padded to the largest constraint. The verifier traces the padded
state down to S_j, removes the pads and accepts iff the trace distance to the
target is at most ``delta + DELTA_SLACK``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import qsim
from .bits import DecodeError, Reader, as_bits, bits_to_bytes, bits_to_ints, blob, bytes_to_bits, u16
from .primitives.commit import commit_digest
from .rng import ensure, random_bits
from .sigma.base import InvalidWitness, SigmaBackend, register

DELTA_SLACK = 1e-6
COM_BYTES = 32


@dataclass(frozen=True)
class Constraint:
    qubits: tuple
    target: qsim.QState
    delta: float


@dataclass(frozen=True)
class CldmInstance:
    n: int
    constraints: tuple

    def to_bytes(self) -> bytes:
        out = [b"CLD1", bytes([self.n, len(self.constraints)])]
        for c in self.constraints:
            out += [bytes([len(c.qubits)]), bytes(c.qubits), struct.pack("<d", c.delta), blob(c.target.to_bytes())]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, x: bytes) -> "CldmInstance":
        r = Reader(x)
        r.expect(b"CLD1")
        n = r.u8()
        m = r.u8()
        if not 1 <= n <= qsim.MAX_QUBITS or m < 1:
            raise DecodeError("bad instance dimensions")
        cons = []
        for _ in range(m):
            size = r.u8()
            qubits = tuple(r.take(size))
            if sorted(set(qubits)) != list(qubits) or any(q >= n for q in qubits) or not qubits:
                raise DecodeError("constraint qubits must be distinct, ascending and in range")
            (delta,) = struct.unpack("<d", r.take(8))
            if not (np.isfinite(delta) and delta >= 0):
                raise DecodeError("bad tolerance")
            target = qsim.QState.from_bytes(r.blob())
            if target.n != size:
                raise DecodeError("target size does not match its qubit set")
            cons.append(Constraint(qubits, target, delta))
        r.finish()
        return cls(n, tuple(cons))


def satisfied(inst: CldmInstance, state: qsim.QState) -> list[bool]:
    return [qsim.trace_distance(qsim.partial_trace(state, c.qubits), c.target) <= c.delta + DELTA_SLACK
            for c in inst.constraints]


@register
class Cldm(SigmaBackend):
    name = "cldm"
    backend_id = 2

    def __init__(self, lam: int = 32, k: int = 8):
        if lam % 8 or lam < 8:
            raise ValueError("security parameter must be a positive multiple of 8")
        super().__init__(lam, k)

    @staticmethod
    def instance(x: bytes) -> CldmInstance:
        return CldmInstance.from_bytes(x)

    def check_instance(self, x: bytes) -> None:
        self.instance(x)

    @staticmethod
    def beta_bits(m: int) -> int:
        return int(np.ceil(np.log2(m))) if m > 1 else 0

    def _per_qubit(self) -> int:
        return 2 + self.lam

    def _slot(self, inst: CldmInstance) -> int:
        return max(len(c.qubits) for c in inst.constraints) * self._per_qubit()

    def randomness_length(self, x: bytes) -> int:
        return self.k * self.instance(x).n * self._per_qubit()

    def challenge_length(self, x: bytes) -> int:
        return self.k * self.beta_bits(len(self.instance(x).constraints))

    def response_length(self, x: bytes) -> int:
        return self.k * self._slot(self.instance(x))

    def constraint_index(self, inst: CldmInstance, beta, rep: int) -> int:
        B = self.beta_bits(len(inst.constraints))
        v = int(bits_to_ints(as_bits(beta)[rep * B:(rep + 1) * B], B)[0]) if B else 0
        return v % len(inst.constraints)

    def _pads(self, r: np.ndarray, n: int, rep: int):
        per = self._per_qubit()
        seg = r[rep * n * per:(rep + 1) * n * per].reshape(n, per)
        return seg[:, 0], seg[:, 1], [bits_to_bytes(s[2:]) for s in seg]

    def sample_randomness(self, x: bytes, wit: bytes, rng=None) -> np.ndarray:
        return random_bits(ensure(rng), self.randomness_length(x))

    def _alpha(self, n: int, reps) -> bytes:
        body = [u16(self.k), bytes([n])]
        for state, coms in reps:
            body.append(blob(state.to_bytes()))
            body.extend(coms)
        return self.encode_alpha(b"".join(body))

    def p1(self, x: bytes, wit: bytes, r) -> bytes:
        inst = self.instance(x)
        state = qsim.QState.from_bytes(wit)
        if state.n != inst.n or not all(satisfied(inst, state)):
            raise InvalidWitness("witness state violates a constraint")
        r = as_bits(r)
        if r.size != self.randomness_length(x):
            raise ValueError("randomness has the wrong length")
        reps = []
        for i in range(self.k):
            a, b, salts = self._pads(r, inst.n, i)
            coms = [commit_digest(bytes([int(a[q]), int(b[q])]), salts[q]) for q in range(inst.n)]
            reps.append((qsim.apply_qotp(state, a, b), coms))
        return self._alpha(inst.n, reps)

    def p3(self, x: bytes, beta, r) -> np.ndarray:
        inst = self.instance(x)
        beta, r = as_bits(beta), as_bits(r)
        per = self._per_qubit()
        slot = self._slot(inst)
        out = []
        for i in range(self.k):
            seg = r[i * inst.n * per:(i + 1) * inst.n * per].reshape(inst.n, per)
            j = self.constraint_index(inst, beta, i)
            body = seg[list(inst.constraints[j].qubits)].ravel()
            out.append(np.concatenate([body, np.zeros(slot - body.size, np.uint8)]))
        return np.concatenate(out).astype(np.uint8) if out else np.zeros(0, np.uint8)

    def p3_layout(self, x: bytes) -> list:
        inst = self.instance(x)
        per = self._per_qubit()
        slot = self._slot(inst)
        m = len(inst.constraints)
        B = self.beta_bits(m)
        layout = []
        for i in range(self.k):
            base = i * inst.n * per
            rows = []
            for v in range(1 << B):
                row = np.full(slot, -1, np.int64)
                idx = [base + q * per + t for q in inst.constraints[v % m].qubits for t in range(per)]
                row[:len(idx)] = idx
                rows.append(row)
            layout.append((i * B, B, np.stack(rows)))
        return layout

    def _parse_alpha(self, alpha: bytes, n: int):
        r = Reader(self.decode_alpha(alpha))
        if r.u16() != self.k or r.u8() != n:
            raise DecodeError("alpha has the wrong shape")
        reps = []
        for _ in range(self.k):
            state = qsim.QState.from_bytes(r.blob())
            if state.n != n:
                raise DecodeError("padded state has the wrong size")
            reps.append((state, [r.take(COM_BYTES) for _ in range(n)]))
        r.finish()
        return reps

    def verify(self, x: bytes, alpha: bytes, beta, gamma) -> bool:
        try:
            inst = self.instance(x)
            reps = self._parse_alpha(alpha, inst.n)
            beta, gamma = as_bits(beta), as_bits(gamma)
        except (DecodeError, ValueError):
            return False
        per = self._per_qubit()
        slot = self._slot(inst)
        if beta.size != self.challenge_length(x) or gamma.size != self.k * slot:
            return False
        for i, (state, coms) in enumerate(reps):
            c = inst.constraints[self.constraint_index(inst, beta, i)]
            g = gamma[i * slot:(i + 1) * slot]
            used = len(c.qubits) * per
            if g[used:].any():
                return False
            op = g[:used].reshape(len(c.qubits), per)
            for q, row in zip(c.qubits, op):
                if coms[q] != commit_digest(bytes([int(row[0]), int(row[1])]), bits_to_bytes(row[2:])):
                    return False
            reduced = qsim.partial_trace(state, c.qubits)
            plain = qsim.apply_qotp(reduced, op[:, 0], op[:, 1])
            if qsim.trace_distance(plain, c.target) > c.delta + DELTA_SLACK:
                return False
        return True

    def simulate(self, x: bytes, beta, rng=None) -> tuple[bytes, np.ndarray]:
        rng = ensure(rng)
        inst = self.instance(x)
        beta = as_bits(beta)
        slot = self._slot(inst)
        reps, gam = [], []
        for i in range(self.k):
            c = inst.constraints[self.constraint_index(inst, beta, i)]
            a = random_bits(rng, inst.n)
            b = random_bits(rng, inst.n)
            state = qsim.apply_qotp(qsim.embed_marginal(c.target, c.qubits, inst.n), a, b)
            coms, body = [], []
            for q in range(inst.n):
                if q in c.qubits:
                    salt = random_bits(rng, self.lam)
                    coms.append(commit_digest(bytes([int(a[q]), int(b[q])]), bits_to_bytes(salt)))
                    body.append(np.concatenate([[a[q], b[q]], salt]))
                else:
                    coms.append(rng.bytes(COM_BYTES))
            reps.append((state, coms))
            body = np.concatenate(body).astype(np.uint8)
            gam.append(np.concatenate([body, np.zeros(slot - body.size, np.uint8)]))
        gamma = np.concatenate(gam).astype(np.uint8) if gam else np.zeros(0, np.uint8)
        return self._alpha(inst.n, reps), gamma

    # best-response cheating prover
    def candidate_states(self, inst: CldmInstance) -> list:
        cands = [qsim.embed_marginal(c.target, c.qubits, inst.n) for c in inst.constraints]
        cands.append(qsim.maximally_mixed(inst.n))
        for bits in range(1 << inst.n):
            cands.append(qsim.basis([(bits >> (inst.n - 1 - q)) & 1 for q in range(inst.n)]))
        return cands

    def cheat_commit(self, x: bytes, rng=None):
        """Pick, per repetition, the candidate state meeting the most constraints."""
        rng = ensure(rng)
        inst = self.instance(x)
        best = max(self.candidate_states(inst), key=lambda s: sum(satisfied(inst, s)))
        r = random_bits(rng, self.randomness_length(x))
        reps = []
        for i in range(self.k):
            a, b, salts = self._pads(r, inst.n, i)
            coms = [commit_digest(bytes([int(a[q]), int(b[q])]), salts[q]) for q in range(inst.n)]
            reps.append((qsim.apply_qotp(best, a, b), coms))
        return self._alpha(inst.n, reps), (x, r)

    def cheat_respond(self, state, beta) -> np.ndarray:
        x, r = state
        return self.p3(x, beta, r)


def encode_witness(state: qsim.QState) -> bytes:
    return state.to_bytes()


def bell_instance(delta: float = 0.01) -> CldmInstance:
    """Two qubits; both marginals maximally mixed and the pair in the Bell state."""
    half = qsim.maximally_mixed(1)
    return CldmInstance(2, (Constraint((0,), half, delta), Constraint((1,), half, delta),
                            Constraint((0, 1), qsim.bell_state(), delta)))


def marginal_instance(delta: float = 0.01) -> CldmInstance:
    """Two qubits, one constraint: the first marginal is maximally mixed."""
    return CldmInstance(2, (Constraint((0,), qsim.maximally_mixed(1), delta),))


def split_instance(delta: float = 0.01) -> tuple[CldmInstance, qsim.QState]:
    """Two qubits, qubit 0 maximally mixed and qubit 1 in |0>; same challenge shape as conflicting_instance."""
    wit = qsim.tensor(qsim.maximally_mixed(1), qsim.basis([0]))
    return CldmInstance(2, (Constraint((0,), qsim.maximally_mixed(1), delta),
                            Constraint((1,), qsim.basis([0]), delta))), wit


def conflicting_instance(delta: float = 0.01) -> CldmInstance:
    """A no-instance: qubit 0 must be |0><0| and also maximally mixed."""
    return CldmInstance(1, (Constraint((0,), qsim.basis([0]), delta),
                            Constraint((0,), qsim.maximally_mixed(1), delta)))


def ghz_instance(delta: float = 0.01) -> tuple[CldmInstance, qsim.QState]:
    """Three qubits in the GHZ state, constrained on each adjacent pair."""
    v = np.zeros(8)
    v[0] = v[7] = 1
    ghz = qsim.pure(v)
    cons = tuple(Constraint(S, qsim.partial_trace(ghz, S), delta) for S in ((0, 1), (1, 2), (0, 2)))
    return CldmInstance(3, cons), ghz
