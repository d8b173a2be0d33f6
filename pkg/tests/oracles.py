"""Reference implementations written independently of the package internals."""
import itertools

import numpy as np

AND, XOR, NOT, C0, C1 = 1, 2, 3, 4, 5


def eval_recursive(n_in, gates, outputs, bits):
    """Evaluate a gate list [(op, a, b)] by recursion from each output wire."""
    memo = {}

    def wire(w):
        if w < n_in:
            return int(bits[w])
        if w in memo:
            return memo[w]
        op, a, b = gates[w - n_in]
        if op == AND:
            v = wire(a) & wire(b)
        elif op == XOR:
            v = wire(a) ^ wire(b)
        elif op == NOT:
            v = 1 - wire(a)
        else:
            v = 1 if op == C1 else 0
        memo[w] = v
        return v

    return [wire(o) for o in outputs]


def random_gates(rng, n_in, n_gates):
    gates = []
    for g in range(n_gates):
        limit = n_in + g
        op = int(rng.choice([AND, XOR, NOT, C0, C1], p=[0.35, 0.35, 0.2, 0.05, 0.05]))
        a = int(rng.integers(limit)) if limit else 0
        b = int(rng.integers(limit)) if limit else 0
        if op in (C0, C1) or limit == 0:
            op = op if op in (C0, C1) else C1
            a = b = 0
        elif op == NOT:
            b = 0
        gates.append((op, a, b))
    return gates


def all_inputs(n):
    return [np.array(bits, np.uint8) for bits in itertools.product([0, 1], repeat=n)]


def partial_trace_loops(rho, n, keep):
    """Partial trace by explicit index sums (qubit 0 most significant)."""
    keep = list(keep)
    drop = [q for q in range(n) if q not in keep]
    dk = 1 << len(keep)
    out = np.zeros((dk, dk), complex)

    def index(kbits, dbits):
        bits = [0] * n
        for q, v in zip(keep, kbits):
            bits[q] = v
        for q, v in zip(drop, dbits):
            bits[q] = v
        return int("".join(map(str, bits)) or "0", 2)

    for i, ki in enumerate(itertools.product([0, 1], repeat=len(keep))):
        for j, kj in enumerate(itertools.product([0, 1], repeat=len(keep))):
            out[i, j] = sum(rho[index(ki, d), index(kj, d)] for d in itertools.product([0, 1], repeat=len(drop)))
    return out


def pauli_pad(a, b):
    X = np.array([[0, 1], [1, 0]], complex)
    Z = np.array([[1, 0], [0, -1]], complex)
    U = np.eye(1, dtype=complex)
    for ai, bi in zip(a, b):
        U = np.kron(U, np.linalg.matrix_power(X, int(ai)) @ np.linalg.matrix_power(Z, int(bi)))
    return U


def trace_distance_eig(r, s):
    return 0.5 * float(np.abs(np.linalg.eigvalsh(r - s)).sum())


def has_hamiltonian_cycle(adj):
    n = adj.shape[0]
    for perm in itertools.permutations(range(1, n)):
        order = (0,) + perm
        if all(adj[order[i], order[(i + 1) % n]] for i in range(n)):
            return True
    return False
