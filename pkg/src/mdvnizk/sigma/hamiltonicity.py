"""Blum's Graph Hamiltonicity protocol with k parallel repetitions.

Instance ``HAM1``: ``b"HAM1" | n u8 | packed n*n adjacency bits (row-major)``,
symmetric with an empty diagonal, 3 <= n <= 16. Witness ``HWT1``:
``b"HWT1" | n u8 | n vertex bytes`` listing a Hamiltonian cycle in order.

Per repetition the prover randomness is, with ``w = ceil(log2 n)``::

    phi     n * w   phi[v] is the image of vertex v
    seed    lam     all n*n cell salts are derived from it
    cycle   n * w   the witness cycle after phi
    salts   n * lam salts of the cycle cells (cycle[j], cycle[j+1])

The first message commits to every cell of phi(G). Challenge bit 0 opens
``phi || seed`` (the verifier re-derives all n*n salts and checks every cell);
bit 1 opens ``cycle || salts`` (n cells that must all hold a 1). Both are
zero-padded to ``n*w + n*lam`` bits.
"""
from __future__ import annotations

import hashlib

import numpy as np

from ..bits import DecodeError, Reader, as_bits, bits_to_bytes, bits_to_ints, bytes_to_bits, ints_to_bits, u16
from ..primitives.commit import commit_digest
from ..rng import ensure, random_bits
from .base import InvalidWitness, SigmaBackend, register

MAX_N = 16
COM_BYTES = 32
SALT_DOMAIN = b"mdvnizk/ham-salt"


def encode_graph(adj) -> bytes:
    adj = np.asarray(adj, dtype=np.uint8)
    n = adj.shape[0]
    return b"HAM1" + bytes([n]) + bits_to_bytes(adj.ravel())


def decode_graph(x: bytes) -> np.ndarray:
    r = Reader(x)
    r.expect(b"HAM1")
    n = r.u8()
    if not 3 <= n <= MAX_N:
        raise DecodeError("graph size out of range")
    bits = bytes_to_bits(r.take(-(-n * n // 8)))
    r.finish()
    if bits[n * n:].any():
        raise DecodeError("nonzero padding bits")
    adj = bits[:n * n].reshape(n, n)
    if (adj != adj.T).any() or adj.diagonal().any():
        raise DecodeError("adjacency must be symmetric with an empty diagonal")
    return adj


def encode_cycle(order) -> bytes:
    order = [int(v) for v in order]
    return b"HWT1" + bytes([len(order)]) + bytes(order)


def decode_cycle(wit: bytes) -> np.ndarray:
    r = Reader(wit)
    r.expect(b"HWT1")
    n = r.u8()
    order = np.frombuffer(r.take(n), np.uint8).astype(np.int64)
    r.finish()
    return order


def is_hamiltonian_cycle(adj: np.ndarray, order) -> bool:
    n = adj.shape[0]
    order = np.asarray(order, dtype=np.int64)
    if order.size != n or sorted(order.tolist()) != list(range(n)):
        return False
    return all(adj[order[j], order[(j + 1) % n]] for j in range(n))


def complete_graph(n: int) -> np.ndarray:
    return (1 - np.eye(n, dtype=np.uint8)).astype(np.uint8)


def cycle_graph(n: int) -> np.ndarray:
    adj = np.zeros((n, n), np.uint8)
    for j in range(n):
        adj[j, (j + 1) % n] = adj[(j + 1) % n, j] = 1
    return adj


def path_graph(n: int) -> np.ndarray:
    adj = np.zeros((n, n), np.uint8)
    for j in range(n - 1):
        adj[j, j + 1] = adj[j + 1, j] = 1
    return adj


def random_hamiltonian_graph(n: int, rng, density: float = 0.3):
    """A graph on n vertices with a planted Hamiltonian cycle; returns (adj, cycle)."""
    order = rng.permutation(n)
    adj = np.zeros((n, n), np.uint8)
    for j in range(n):
        u, v = order[j], order[(j + 1) % n]
        adj[u, v] = adj[v, u] = 1
    extra = np.triu(rng.random((n, n)) < density, 1)
    adj |= (extra | extra.T).astype(np.uint8)
    np.fill_diagonal(adj, 0)
    return adj, order


def cell_salt(seed_bits, i: int, j: int, lam: int) -> bytes:
    return hashlib.sha256(SALT_DOMAIN + bits_to_bytes(seed_bits) + bytes([i, j])).digest()[:lam // 8]


def _commit_cells(H: np.ndarray, seed, lam: int) -> bytes:
    n = H.shape[0]
    return b"".join(commit_digest(bytes([int(H[i, j])]), cell_salt(seed, i, j, lam))
                    for i in range(n) for j in range(n))


def _is_perm(values, n: int) -> bool:
    return sorted(int(v) for v in values) == list(range(n))


@register
class Hamiltonicity(SigmaBackend):
    name = "ham"
    backend_id = 1

    def __init__(self, lam: int = 32, k: int = 40):
        if lam % 8 or lam < 8:
            raise ValueError("security parameter must be a positive multiple of 8")
        super().__init__(lam, k)

    # sizes
    @staticmethod
    def _n(x: bytes) -> int:
        return decode_graph(x).shape[0]

    @staticmethod
    def width(n: int) -> int:
        return max(1, int(np.ceil(np.log2(n))))

    def _fields(self, n: int):
        w = self.width(n)
        return n * w, self.lam, n * w, n * self.lam

    def rep_length(self, n: int) -> int:
        return sum(self._fields(n))

    def slot_length(self, n: int) -> int:
        f = self._fields(n)
        return max(f[0] + f[1], f[2] + f[3])

    def randomness_length(self, x: bytes) -> int:
        return self.k * self.rep_length(self._n(x))

    def challenge_length(self, x: bytes) -> int:
        return self.k

    def response_length(self, x: bytes) -> int:
        return self.k * self.slot_length(self._n(x))

    def check_instance(self, x: bytes) -> None:
        decode_graph(x)

    # randomness
    def _split(self, r: np.ndarray, n: int, rep: int):
        L = self.rep_length(n)
        seg = r[rep * L:(rep + 1) * L]
        a, b, c, _ = self._fields(n)
        return seg[:a], seg[a:a + b], seg[a + b:a + b + c], seg[a + b + c:]

    def pack_rep(self, n: int, phi, seed, cycle, salts: list[bytes]) -> np.ndarray:
        w = self.width(n)
        return np.concatenate([ints_to_bits(phi, w), as_bits(seed), ints_to_bits(cycle, w),
                               bytes_to_bits(b"".join(salts))]).astype(np.uint8)

    def sample_randomness(self, x: bytes, wit: bytes, rng=None) -> np.ndarray:
        rng = ensure(rng)
        adj = decode_graph(x)
        n = adj.shape[0]
        cyc = decode_cycle(wit)
        if not is_hamiltonian_cycle(adj, cyc):
            raise InvalidWitness("witness is not a Hamiltonian cycle of the graph")
        reps = []
        for _ in range(self.k):
            phi = rng.permutation(n)
            seed = random_bits(rng, self.lam)
            order = phi[cyc]
            salts = [cell_salt(seed, int(order[j]), int(order[(j + 1) % n]), self.lam) for j in range(n)]
            reps.append(self.pack_rep(n, phi, seed, order, salts))
        return np.concatenate(reps) if reps else np.zeros(0, np.uint8)

    # messages
    def p1(self, x: bytes, wit: bytes, r) -> bytes:
        adj = decode_graph(x)
        n = adj.shape[0]
        if not is_hamiltonian_cycle(adj, decode_cycle(wit)):
            raise InvalidWitness("witness is not a Hamiltonian cycle of the graph")
        r = as_bits(r)
        if r.size != self.randomness_length(x):
            raise ValueError("randomness has the wrong length")
        w = self.width(n)
        coms = []
        for i in range(self.k):
            phi_b, seed, _, _ = self._split(r, n, i)
            phi = bits_to_ints(phi_b, w)
            if not _is_perm(phi, n):
                raise ValueError("randomness does not encode a permutation")
            H = np.zeros_like(adj)
            H[np.ix_(phi, phi)] = adj
            coms.append(_commit_cells(H, seed, self.lam))
        return self.encode_alpha(u16(self.k) + bytes([n]) + b"".join(coms))

    def p3(self, x: bytes, beta, r) -> np.ndarray:
        n = self._n(x)
        beta, r = as_bits(beta), as_bits(r)
        slot = self.slot_length(n)
        out = []
        for i in range(self.k):
            phi, seed, cyc, salts = self._split(r, n, i)
            body = np.concatenate([phi, seed]) if beta[i] == 0 else np.concatenate([cyc, salts])
            out.append(np.concatenate([body, np.zeros(slot - body.size, np.uint8)]))
        return np.concatenate(out).astype(np.uint8) if out else np.zeros(0, np.uint8)

    def p3_layout(self, x: bytes) -> list:
        n = self._n(x)
        a, b, c, d = self._fields(n)
        L, slot = self.rep_length(n), self.slot_length(n)
        layout = []
        for i in range(self.k):
            base = i * L
            row0 = np.full(slot, -1, np.int64)
            row0[:a + b] = np.arange(base, base + a + b)
            row1 = np.full(slot, -1, np.int64)
            row1[:c + d] = np.arange(base + a + b, base + L)
            layout.append((i, 1, np.stack([row0, row1])))
        return layout

    def _parse_alpha(self, alpha: bytes, n: int) -> list[list[bytes]]:
        r = Reader(self.decode_alpha(alpha))
        if r.u16() != self.k or r.u8() != n:
            raise DecodeError("alpha has the wrong shape")
        reps = [[r.take(COM_BYTES) for _ in range(n * n)] for _ in range(self.k)]
        r.finish()
        return reps

    def verify(self, x: bytes, alpha: bytes, beta, gamma) -> bool:
        try:
            adj = decode_graph(x)
            n = adj.shape[0]
            coms = self._parse_alpha(alpha, n)
            beta, gamma = as_bits(beta), as_bits(gamma)
        except (DecodeError, ValueError):
            return False
        slot = self.slot_length(n)
        if beta.size != self.k or gamma.size != self.k * slot:
            return False
        w = self.width(n)
        a, b, c, d = self._fields(n)
        for i in range(self.k):
            g = gamma[i * slot:(i + 1) * slot]
            if beta[i] == 0:
                if g[a + b:].any():
                    return False
                phi = bits_to_ints(g[:a], w)
                if not _is_perm(phi, n):
                    return False
                H = np.zeros_like(adj)
                H[np.ix_(phi, phi)] = adj
                if _commit_cells(H, g[a:a + b], self.lam) != b"".join(coms[i]):
                    return False
            else:
                if g[c + d:].any():
                    return False
                order = bits_to_ints(g[:c], w)
                if not _is_perm(order, n):
                    return False
                salts = bits_to_bytes(g[c:c + d])
                sb = self.lam // 8
                for j in range(n):
                    u, v = int(order[j]), int(order[(j + 1) % n])
                    if coms[i][u * n + v] != commit_digest(b"\x01", salts[j * sb:(j + 1) * sb]):
                        return False
        return True

    def simulate(self, x: bytes, beta, rng=None) -> tuple[bytes, np.ndarray]:
        """Accepting transcript for a known challenge; never looks for a cycle."""
        rng = ensure(rng)
        adj = decode_graph(x)
        n = adj.shape[0]
        beta = as_bits(beta)
        slot = self.slot_length(n)
        w = self.width(n)
        coms, gam = [], []
        for i in range(self.k):
            seed = random_bits(rng, self.lam)
            if beta[i] == 0:
                phi = rng.permutation(n)
                H = np.zeros_like(adj)
                H[np.ix_(phi, phi)] = adj
                body = np.concatenate([ints_to_bits(phi, w), seed])
            else:
                H = complete_graph(n)
                order = rng.permutation(n)
                salts = b"".join(cell_salt(seed, int(order[j]), int(order[(j + 1) % n]), self.lam)
                                 for j in range(n))
                body = np.concatenate([ints_to_bits(order, w), bytes_to_bits(salts)])
            coms.append(_commit_cells(H, seed, self.lam))
            gam.append(np.concatenate([body, np.zeros(slot - body.size, np.uint8)]))
        alpha = self.encode_alpha(u16(self.k) + bytes([n]) + b"".join(coms))
        gamma = np.concatenate(gam).astype(np.uint8) if gam else np.zeros(0, np.uint8)
        return alpha, gamma

    # cheating prover without a witness
    def cheat_commit(self, x: bytes, rng=None):
        """Commit to phi(G) honestly in every repetition; returns (alpha, state)."""
        rng = ensure(rng)
        adj = decode_graph(x)
        n = adj.shape[0]
        reps = []
        for _ in range(self.k):
            phi = rng.permutation(n)
            reps.append((phi, random_bits(rng, self.lam)))
        coms = []
        for phi, seed in reps:
            H = np.zeros_like(adj)
            H[np.ix_(phi, phi)] = adj
            coms.append(_commit_cells(H, seed, self.lam))
        return self.encode_alpha(u16(self.k) + bytes([n]) + b"".join(coms)), (n, reps)

    def cheat_respond(self, state, beta) -> np.ndarray:
        """Open everything on challenge 0; on challenge 1 there is no cycle to show."""
        n, reps = state
        w = self.width(n)
        slot = self.slot_length(n)
        out = []
        for (phi, seed), b in zip(reps, as_bits(beta)):
            body = np.concatenate([ints_to_bits(phi, w), seed])
            out.append(np.concatenate([body, np.zeros(slot - body.size, np.uint8)]))
        return np.concatenate(out).astype(np.uint8) if out else np.zeros(0, np.uint8)


def opening_count(beta_bit: int, n: int) -> int:
    """Number of cell commitments opened by one repetition."""
    return n * n if beta_bit == 0 else n


def count_alpha_commitments(backend: Hamiltonicity, alpha: bytes, n: int) -> int:
    return sum(len(rep) for rep in backend._parse_alpha(alpha, n))
