"""Boolean circuit IR over the gate set {AND, XOR, NOT, CONST0, CONST1}.

Wires ``0 .. inputs-1`` are inputs; gate ``g`` drives wire ``inputs + g``.
Gates may only read earlier wires, so gate order is a topological order.

The canonical byte encoding (``CIR1``) is::

    b"CIR1" | varint inputs | varint gates
            | per gate: opcode byte, varint operand wire(s)
            | varint outputs | varint output wire indices

Opcodes: AND=0x01, XOR=0x02, NOT=0x03, CONST0=0x04, CONST1=0x05. Binary gates
carry two operands, NOT one, constants none. Before encoding, gates are
renumbered by first use: a depth-first post-order walk from the outputs
(operands left to right), then any gates not reachable from an output, in
their original order. Two circuits that differ only in the insertion order of
independent gates therefore encode to identical bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .bits import DecodeError, Reader, as_bits, encode_varint
from .kernels import OP_AND, OP_CONST0, OP_CONST1, OP_NOT, OP_XOR

MAGIC = b"CIR1"
DEFAULT_SIZE_BOUND = 1 << 20

OP_NAMES = {OP_AND: "AND", OP_XOR: "XOR", OP_NOT: "NOT", OP_CONST0: "CONST0", OP_CONST1: "CONST1"}
_ARITY = {OP_AND: 2, OP_XOR: 2, OP_NOT: 1, OP_CONST0: 0, OP_CONST1: 0}

# builder references for folded constants
C0 = -1
C1 = -2


class CircuitError(ValueError):
    pass


class UnsupportedBackend(CircuitError):
    pass


class ArityError(CircuitError):
    """Input length does not match the circuit's input count."""


@dataclass(frozen=True, eq=False)
class Circuit:
    inputs: int
    ops: np.ndarray
    a: np.ndarray
    b: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        ops = np.ascontiguousarray(self.ops, dtype=np.uint8)
        a = np.ascontiguousarray(self.a, dtype=np.int64)
        b = np.ascontiguousarray(self.b, dtype=np.int64)
        outs = np.ascontiguousarray(self.outputs, dtype=np.int64)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "outputs", outs)
        if self.inputs < 0:
            raise CircuitError("negative input count")
        if not (ops.shape == a.shape == b.shape) or ops.ndim != 1:
            raise CircuitError("gate arrays must be 1-D and equally long")
        if ops.size and (ops.min() < OP_AND or ops.max() > OP_CONST1):
            raise CircuitError("unknown opcode")
        limit = self.inputs + np.arange(ops.size)
        uses_a = ops <= OP_NOT
        uses_b = ops <= OP_XOR
        if np.any(uses_a & ((a < 0) | (a >= limit))) or np.any(uses_b & ((b < 0) | (b >= limit))):
            raise CircuitError("gate reads a wire that is not earlier in topological order")
        if outs.size and (outs.min() < 0 or outs.max() >= self.n_wires):
            raise CircuitError("output references a missing wire")

    @property
    def n_gates(self) -> int:
        return int(self.ops.size)

    @property
    def n_wires(self) -> int:
        return self.inputs + self.n_gates

    @property
    def n_outputs(self) -> int:
        return int(self.outputs.size)

    @cached_property
    def n_and(self) -> int:
        return int(np.count_nonzero(self.ops == OP_AND))

    @property
    def gates(self) -> list[tuple]:
        out = []
        for op, x, y in zip(self.ops.tolist(), self.a.tolist(), self.b.tolist()):
            out.append((OP_NAMES[op],) + (x, y)[:_ARITY[op]])
        return out

    def with_outputs(self, outputs) -> "Circuit":
        """Same gates, different output list (gate arrays are shared)."""
        return Circuit(self.inputs, self.ops, self.a, self.b, np.asarray(outputs, dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.inputs == other.inputs and np.array_equal(self.ops, other.ops)
                and np.array_equal(self._operands()[0], other._operands()[0])
                and np.array_equal(self._operands()[1], other._operands()[1])
                and np.array_equal(self.outputs, other.outputs))

    __hash__ = None

    def _operands(self):
        ar = np.array([_ARITY.get(o, 0) for o in range(6)])[self.ops] if self.ops.size else np.zeros(0, int)
        return np.where(ar >= 1, self.a, 0), np.where(ar >= 2, self.b, 0)


class CircuitBuilder:
    """Vectorized circuit construction with constant folding.

    Every operation takes and returns int64 arrays of references: a wire index
    (>= 0) or one of the folded constants ``C0``/``C1``. Gates whose value is
    determined by constants are never emitted.
    """

    def __init__(self, n_inputs: int):
        self.n_inputs = n_inputs
        self._next = n_inputs
        self._ops: list[np.ndarray] = []
        self._a: list[np.ndarray] = []
        self._b: list[np.ndarray] = []

    def input_wires(self) -> np.ndarray:
        return np.arange(self.n_inputs, dtype=np.int64)

    @staticmethod
    def const(bits) -> np.ndarray:
        return np.where(as_bits(bits) == 1, C1, C0).astype(np.int64)

    def _emit(self, op: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        n = a.size
        ids = np.arange(self._next, self._next + n, dtype=np.int64)
        self._next += n
        self._ops.append(np.full(n, op, dtype=np.uint8))
        self._a.append(a.astype(np.int64))
        self._b.append(b.astype(np.int64))
        return ids

    def not_(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        out = np.where(x == C0, C1, C0).astype(np.int64)
        wire = x >= 0
        if wire.any():
            out[wire] = self._emit(OP_NOT, x[wire], np.zeros(int(wire.sum()), np.int64))
        return out.reshape(x.shape)

    def xor(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64))
        x, y = x.ravel(), y.ravel()
        out = np.empty(x.size, dtype=np.int64)
        xc, yc = x < 0, y < 0
        both = xc & yc
        out[both] = np.where((x[both] == C1) ^ (y[both] == C1), C1, C0)
        same = ~xc & ~yc & (x == y)
        out[same] = C0
        pass_y = xc & ~yc & (x == C0)
        out[pass_y] = y[pass_y]
        pass_x = yc & ~xc & (y == C0)
        out[pass_x] = x[pass_x]
        neg_y = xc & ~yc & (x == C1)
        neg_x = yc & ~xc & (y == C1)
        negate = neg_x | neg_y
        if negate.any():
            src = np.where(neg_x, x, y)[negate]
            out[negate] = self.not_(src)
        gate = ~xc & ~yc & ~same
        if gate.any():
            out[gate] = self._emit(OP_XOR, x[gate], y[gate])
        return out

    def and_(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64))
        x, y = x.ravel(), y.ravel()
        out = np.empty(x.size, dtype=np.int64)
        xc, yc = x < 0, y < 0
        zero = (x == C0) | (y == C0)
        out[zero] = C0
        both1 = (x == C1) & (y == C1)
        out[both1] = C1
        pass_y = (x == C1) & ~yc
        out[pass_y] = y[pass_y]
        pass_x = (y == C1) & ~xc
        out[pass_x] = x[pass_x]
        same = ~xc & ~yc & (x == y)
        out[same] = x[same]
        gate = ~xc & ~yc & ~same
        if gate.any():
            out[gate] = self._emit(OP_AND, x[gate], y[gate])
        return out

    def or_(self, x, y) -> np.ndarray:
        return self.xor(self.xor(x, y), self.and_(x, y))

    def mux(self, s, x, y) -> np.ndarray:
        """``y`` where the selector is 1, else ``x``."""
        s, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=np.int64) for v in (s, x, y)))
        s, x, y = s.ravel(), x.ravel(), y.ravel()
        out = np.empty(s.size, dtype=np.int64)
        pick_x = (s == C0) | (x == y)
        pick_y = (s == C1) & ~pick_x
        out[pick_x] = x[pick_x]
        out[pick_y] = y[pick_y]
        rest = ~pick_x & ~pick_y
        if rest.any():
            xs, ys, ss = x[rest], y[rest], s[rest]
            out[rest] = self.xor(xs, self.and_(ss, self.xor(xs, ys)))
        return out

    def embed(self, c: Circuit, input_refs) -> np.ndarray:
        """Splice a copy of ``c`` onto ``input_refs``; returns refs of its outputs.

        Gates are copied verbatim (no folding), which keeps this fast for big
        cached sub-circuits.
        """
        refs = np.asarray(input_refs, dtype=np.int64).ravel().copy()
        if refs.size != c.inputs:
            raise ArityError(f"sub-circuit takes {c.inputs} inputs, got {refs.size}")
        for const, op in ((C0, OP_CONST0), (C1, OP_CONST1)):
            if np.any(refs == const):
                refs[refs == const] = self._emit(op, np.zeros(1, np.int64), np.zeros(1, np.int64))[0]
        mapping = np.concatenate([refs, np.arange(self._next, self._next + c.n_gates, dtype=np.int64)])
        self._next += c.n_gates
        self._ops.append(c.ops.astype(np.uint8))
        self._a.append(mapping[c.a])
        self._b.append(mapping[c.b])
        return mapping[c.outputs]

    def build(self, outputs) -> Circuit:
        outputs = np.asarray(outputs, dtype=np.int64).ravel()
        consts = {}
        for c, op in ((C0, OP_CONST0), (C1, OP_CONST1)):
            if np.any(outputs == c):
                consts[c] = self._emit(op, np.zeros(1, np.int64), np.zeros(1, np.int64))[0]
        outputs = outputs.copy()
        for c, wire in consts.items():
            outputs[outputs == c] = wire
        if self._ops:
            ops = np.concatenate(self._ops)
            a = np.concatenate(self._a)
            b = np.concatenate(self._b)
        else:
            ops = np.zeros(0, np.uint8)
            a = b = np.zeros(0, np.int64)
        a = np.where(ops <= OP_NOT, a, 0)
        b = np.where(ops <= OP_XOR, b, 0)
        return Circuit(self.n_inputs, ops, a, b, outputs)


# -- evaluation ---------------------------------------------------------------

def eval_batch(c: Circuit, inputs: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Evaluate on many inputs at once: (L, inputs) -> (L, outputs)."""
    inputs = np.asarray(inputs, dtype=np.uint8)
    if inputs.ndim != 2 or inputs.shape[1] != c.inputs:
        raise ArityError(f"expected inputs of width {c.inputs}")
    L = inputs.shape[0]
    x = kernels.pack_lanes(inputs)
    wires = kernels.eval_plain(c.ops, c.a, c.b, c.inputs, x, backend=backend)
    return kernels.unpack_lanes(wires[c.outputs], L).reshape(L, c.n_outputs)


def eval_circuit(c: Circuit, inp, backend: str | None = None) -> np.ndarray:
    bits = as_bits(inp)
    if bits.size != c.inputs:
        raise ArityError(f"circuit takes {c.inputs} input bits, got {bits.size}")
    return eval_batch(c, bits.reshape(1, -1), backend=backend)[0]


# -- canonical encoding ---------------------------------------------------------

def normalize(c: Circuit) -> Circuit:
    """Renumber gates by first use (see module docstring)."""
    n_in = c.inputs
    ops, a, b = c.ops.tolist(), c.a.tolist(), c.b.tolist()
    order: list[int] = []
    seen = bytearray(c.n_gates)

    def visit(root_wire: int):
        stack = [(root_wire, False)]
        while stack:
            w, expanded = stack.pop()
            if w < n_in:
                continue
            g = w - n_in
            if seen[g] == 2:
                continue
            if expanded:
                seen[g] = 2
                order.append(g)
                continue
            if seen[g] == 1:
                continue
            seen[g] = 1
            stack.append((w, True))
            ar = _ARITY[ops[g]]
            operands = (a[g], b[g])[:ar]
            for opnd in reversed(operands):
                stack.append((opnd, False))

    for w in c.outputs.tolist():
        visit(w)
    for g in range(c.n_gates):
        if not seen[g]:
            visit(n_in + g)
    remap = np.arange(c.n_wires, dtype=np.int64)
    perm = np.asarray(order, dtype=np.int64)
    remap[n_in + perm] = n_in + np.arange(perm.size)
    new_ops = c.ops[perm]
    new_a = np.where(new_ops <= OP_NOT, remap[c.a[perm]], 0)
    new_b = np.where(new_ops <= OP_XOR, remap[c.b[perm]], 0)
    return Circuit(n_in, new_ops, new_a, new_b, remap[c.outputs])


def canonical_encode(c: Circuit) -> bytes:
    n = normalize(c)
    out = bytearray(MAGIC)
    out += encode_varint(n.inputs)
    out += encode_varint(n.n_gates)
    for op, x, y in zip(n.ops.tolist(), n.a.tolist(), n.b.tolist()):
        out.append(op)
        ar = _ARITY[op]
        if ar >= 1:
            out += encode_varint(x)
        if ar == 2:
            out += encode_varint(y)
    out += encode_varint(n.n_outputs)
    for w in n.outputs.tolist():
        out += encode_varint(w)
    return bytes(out)


def canonical_decode(data: bytes) -> Circuit:
    r = Reader(data)
    r.expect(MAGIC)
    n_in = r.varint()
    n_g = r.varint()
    ops = np.zeros(n_g, np.uint8)
    a = np.zeros(n_g, np.int64)
    b = np.zeros(n_g, np.int64)
    for g in range(n_g):
        op = r.u8()
        if op not in _ARITY:
            raise DecodeError(f"unknown opcode {op:#x}")
        ops[g] = op
        ar = _ARITY[op]
        if ar >= 1:
            a[g] = r.varint()
        if ar == 2:
            b[g] = r.varint()
    outs = np.array([r.varint() for _ in range(r.varint())], dtype=np.int64)
    r.finish()
    try:
        return Circuit(n_in, ops, a, b, outs)
    except CircuitError as exc:
        raise DecodeError(str(exc)) from exc


# -- protocol circuits ----------------------------------------------------------

def build_const_circuit(gamma, input_arity: int) -> Circuit:
    """The circuit that ignores its inputs and always outputs ``gamma``."""
    bld = CircuitBuilder(input_arity)
    return bld.build(CircuitBuilder.const(gamma))


def p3_gadget(bld: CircuitBuilder, beta_refs: np.ndarray, r_refs: np.ndarray, layout) -> np.ndarray:
    """Response circuit from a backend's selection layout.

    ``layout`` is a list of ``(beta_offset, beta_bits, table)`` per repetition,
    where ``table`` has shape (2**beta_bits, slot_len) and holds indices into
    the randomness (or -1 for a zero bit). The challenge bits pick the row.
    """
    r_ext = np.concatenate([r_refs, np.array([C0], np.int64)])
    pieces = []
    for offset, nbits, table in layout:
        rows = [r_ext[np.where(row < 0, r_ext.size - 1, row)] for row in np.asarray(table)]
        sel = beta_refs[offset:offset + nbits]
        for j in range(nbits - 1, -1, -1):
            rows = [bld.mux(sel[j], rows[2 * u], rows[2 * u + 1]) for u in range(len(rows) // 2)]
        pieces.append(rows[0])
    return np.concatenate(pieces) if pieces else np.zeros(0, np.int64)


def build_prover_circuit(x: bytes, r, backend) -> Circuit:
    """C_{x,r}: PRF key bits in, response bits out.

    Computes the instance challenge ``PRF_k(x)`` and feeds it to the backend's
    response function with ``r`` hard-wired.
    """
    from .primitives import prf

    if not hasattr(backend, "p3_layout"):
        raise UnsupportedBackend(f"{type(backend).__name__} has no circuit-expressible response function")
    if not x:
        raise ValueError("instance bytes must be nonempty")
    layout = backend.p3_layout(x)
    r = as_bits(r)
    if r.size != backend.randomness_length(x):
        raise ValueError(f"randomness must be {backend.randomness_length(x)} bits, got {r.size}")
    bld = CircuitBuilder(backend.lam)
    beta = prf.prf_stream_gadget(bld, bld.input_wires(), x, backend.challenge_length(x))
    gamma = p3_gadget(bld, beta, CircuitBuilder.const(r), layout)
    return bld.build(gamma)
