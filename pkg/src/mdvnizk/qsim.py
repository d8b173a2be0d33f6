"""Small density-matrix simulator (up to 6 qubits).

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
basis index. Every QState is checked on construction: Hermitian, unit trace
and positive semidefinite, each within 1e-9.

Serialization ``QST1``: ``b"QST1" | n u8 | 4**n complex128`` (row-major,
little-endian real then imaginary parts).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import DecodeError, Reader, as_bits

MAX_QUBITS = 6
TOL = 1e-9


class StateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QState:
    n: int
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.complex128)
        object.__setattr__(self, "rho", rho)
        check_density(rho, self.n)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def to_bytes(self) -> bytes:
        return b"QST1" + bytes([self.n]) + self.rho.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "QState":
        r = Reader(data)
        r.expect(b"QST1")
        n = r.u8()
        if n > MAX_QUBITS:
            raise DecodeError("too many qubits")
        d = 1 << n
        rho = np.frombuffer(r.take(16 * d * d), "<c16").reshape(d, d).astype(np.complex128)
        r.finish()
        try:
            return cls(n, rho)
        except StateError as exc:
            raise DecodeError(str(exc)) from exc


def check_density(rho: np.ndarray, n: int) -> None:
    if n < 0 or n > MAX_QUBITS:
        raise StateError(f"qubit count {n} outside 0..{MAX_QUBITS}")
    d = 1 << n
    if rho.shape != (d, d):
        raise StateError("matrix shape does not match qubit count")
    if not np.all(np.isfinite(rho)):
        raise StateError("non-finite entries")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) >= TOL:
        raise StateError("not Hermitian")
    if abs(np.trace(rho) - 1) > TOL:
        raise StateError("trace is not 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -TOL:
        raise StateError("not positive semidefinite")


def _clean(rho: np.ndarray) -> np.ndarray:
    return (rho + rho.conj().T) / 2


def pure(vec) -> QState:
    v = np.asarray(vec, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    n = int(np.log2(v.size))
    return QState(n, np.outer(v, v.conj()))


def basis(bits) -> QState:
    bits = as_bits(bits)
    v = np.zeros(1 << bits.size, np.complex128)
    v[int("".join(map(str, bits.tolist())) or "0", 2)] = 1
    return pure(v)


def maximally_mixed(n: int) -> QState:
    d = 1 << n
    return QState(n, np.eye(d, dtype=np.complex128) / d)


def bell_state() -> QState:
    return pure([1, 0, 0, 1])


def random_state(n: int, rng, rank: int | None = None) -> QState:
    d = 1 << n
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return QState(n, _clean(rho / np.trace(rho).real))


def tensor(a: QState, b: QState) -> QState:
    return QState(a.n + b.n, np.kron(a.rho, b.rho))


def mix(states, weights) -> QState:
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    rho = sum(wi * s.rho for wi, s in zip(w, states))
    return QState(states[0].n, _clean(rho))


def random_unitary(d: int, rng) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def apply_unitary(s: QState, U: np.ndarray) -> QState:
    return QState(s.n, _clean(U @ s.rho @ U.conj().T))


def apply_qotp(s: QState, a, b) -> QState:
    """Conjugate by the product of X^a_i Z^b_i over qubits."""
    a, b = as_bits(a), as_bits(b)
    if a.size != s.n or b.size != s.n:
        raise StateError("pad length must equal the qubit count")
    idx = np.arange(s.dim)
    weights = 1 << np.arange(s.n - 1, -1, -1)
    amask = int((a * weights).sum()) if s.n else 0
    bmask = int((b * weights).sum()) if s.n else 0
    parity = np.array([bin(i & bmask).count("1") & 1 for i in range(s.dim)])
    sign = 1 - 2 * parity
    out = np.empty_like(s.rho)
    out[np.ix_(idx ^ amask, idx ^ amask)] = s.rho * np.outer(sign, sign)
    return QState(s.n, out)


def partial_trace(s: QState, keep) -> QState:
    """Reduced state on ``keep`` (in the listed order); empty ``keep`` gives the scalar 1."""
    keep = [int(q) for q in keep]
    if any(q < 0 or q >= s.n for q in keep) or len(set(keep)) != len(keep):
        raise StateError("keep must list distinct qubits of the state")
    rest = [q for q in range(s.n) if q not in keep]
    t = s.rho.reshape([2] * (2 * s.n))
    perm = keep + rest + [s.n + q for q in keep] + [s.n + q for q in rest]
    dk, dr = 1 << len(keep), 1 << len(rest)
    t = np.transpose(t, perm).reshape(dk, dr, dk, dr)
    return QState(len(keep), _clean(np.einsum("ijkj->ik", t)))


def permute_qubits(s: QState, order) -> QState:
    """Qubit ``order[i]`` of ``s`` becomes qubit ``i``."""
    order = [int(q) for q in order]
    t = s.rho.reshape([2] * (2 * s.n))
    t = np.transpose(t, order + [s.n + q for q in order])
    return QState(s.n, t.reshape(s.dim, s.dim))


def embed_marginal(target: QState, qubits, n: int) -> QState:
    """``target`` on ``qubits`` tensored with the maximally mixed state elsewhere."""
    qubits = [int(q) for q in qubits]
    rest = [q for q in range(n) if q not in qubits]
    full = tensor(target, maximally_mixed(len(rest)))
    # full has qubits in the order qubits + rest; move them into place
    pos = qubits + rest
    inverse = [pos.index(q) for q in range(n)]
    return permute_qubits(full, inverse)


def trace_distance(r: QState, s: QState) -> float:
    if r.n != s.n:
        raise StateError("states have different qubit counts")
    ev = np.linalg.eigvalsh(_clean(r.rho - s.rho))
    return float(min(1.0, max(0.0, 0.5 * np.abs(ev).sum())))


def pad_average(s: QState) -> QState:
    """Average of the padded state over all 4**n pads."""
    acc = np.zeros_like(s.rho)
    for am in range(s.dim):
        for bm in range(s.dim):
            a = [(am >> (s.n - 1 - i)) & 1 for i in range(s.n)]
            b = [(bm >> (s.n - 1 - i)) & 1 for i in range(s.n)]
            acc += apply_qotp(s, a, b).rho
    return QState(s.n, _clean(acc / (s.dim * s.dim)))
