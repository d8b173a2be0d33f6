"""NP NIZK for the protocol's consistency relations.

Two backends share the statement and relation layer:

* ``mpcith``: Fiat-Shamir over MPC-in-the-head, zero knowledge via a
  programmable oracle (the simulator's trapdoor).
* ``transcript-check``: the witness masked under a crs-derived key. Complete
  and sound in-harness, not zero knowledge; for fast plumbing tests only.

The crs (``NCR1``) is ``b"NCR1" | lam u16 | rounds u16 | blob random bytes``
with ``lam/4`` random bytes. It seeds the oracle; a simulated crs shares its
oracle object with the trapdoor, so programmed answers are only visible
through that in-memory crs.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..bits import DecodeError, Reader, blob, u16
from ..rng import ensure
from . import mpcith
from .mpcith import FalseStatement, default_rounds, search_forgery
from .oracle import ProgrammableOracle, ProgrammingConflict
from .relations import (REL_P, REL_V, Relation, Statement, UnknownRelation, Witness, relation_check,
                        relation_for)

MPCITH = "mpcith"
TRANSCRIPT_CHECK = "transcript-check"
BACKENDS = (MPCITH, TRANSCRIPT_CHECK)


class SimulationFailure(RuntimeError):
    pass


def crs_length(lam: int) -> int:
    return lam // 4


@dataclass(eq=False)
class NizkCrs:
    data: bytes
    lam: int
    rounds: int
    oracle: ProgrammableOracle = field(repr=False, default=None)

    def __post_init__(self):
        if self.oracle is None:
            self.oracle = ProgrammableOracle(self.data)

    def __eq__(self, other):
        return (isinstance(other, NizkCrs) and (self.data, self.lam, self.rounds)
                == (other.data, other.lam, other.rounds))

    __hash__ = None

    def to_bytes(self) -> bytes:
        return b"NCR1" + u16(self.lam) + u16(self.rounds) + blob(self.data)

    @classmethod
    def from_bytes(cls, data: bytes) -> "NizkCrs":
        r = Reader(data)
        r.expect(b"NCR1")
        lam = r.u16()
        rounds = r.u16()
        raw = r.blob()
        r.finish()
        if len(raw) != crs_length(lam) or rounds < 1:
            raise DecodeError("crs has the wrong shape")
        return cls(raw, lam, rounds)


@dataclass(frozen=True)
class Trapdoor:
    oracle: ProgrammableOracle


def nizk_setup(lam: int, rng=None, rounds: int | None = None) -> NizkCrs:
    if lam < 16 or lam % 8:
        raise ValueError("security parameter must be a multiple of 8 and at least 16")
    rng = ensure(rng)
    return NizkCrs(rng.bytes(crs_length(lam)), lam, rounds or default_rounds(lam))


def nizk_sim_setup(lam: int, rng=None, rounds: int | None = None) -> tuple[NizkCrs, Trapdoor]:
    crs = nizk_setup(lam, rng, rounds)
    return crs, Trapdoor(crs.oracle)


def _tc_mask(crs: NizkCrs, n: int) -> bytes:
    return hashlib.shake_256(b"mdvnizk/tc" + crs.data).digest(n)


def nizk_prove(crs: NizkCrs, stmt: Statement, wit: Witness, rng=None, backend: str = MPCITH,
               relation: Relation | None = None) -> bytes:
    """Prove ``stmt``; raises FalseStatement rather than emitting a proof of a false claim."""
    if backend == MPCITH:
        return mpcith.prove(crs, stmt, wit, rng, relation=relation)
    if backend == TRANSCRIPT_CHECK:
        if not relation_check(stmt, wit):
            raise FalseStatement("witness does not satisfy the relation")
        raw = wit.to_bytes()
        return b"TCK1" + blob(bytes(a ^ b for a, b in zip(raw, _tc_mask(crs, len(raw)))))
    raise ValueError(f"unknown NIZK backend {backend!r}")


def nizk_verify(crs: NizkCrs, stmt: Statement, proof: bytes, relation: Relation | None = None) -> bool:
    proof = bytes(proof)
    if proof.startswith(mpcith.MAGIC):
        return mpcith.verify(crs, stmt, proof, relation=relation)
    if proof.startswith(b"TCK1"):
        try:
            r = Reader(proof)
            r.expect(b"TCK1")
            masked = r.blob()
            r.finish()
            wit = Witness.from_bytes(bytes(a ^ b for a, b in zip(masked, _tc_mask(crs, len(masked)))))
            return relation_check(stmt, wit)
        except (DecodeError, ValueError, KeyError):
            return False
    return False


def nizk_sim_prove(td: Trapdoor, crs: NizkCrs, stmt: Statement, rng=None, relation: Relation | None = None) -> bytes:
    if td.oracle is not crs.oracle:
        raise SimulationFailure("trapdoor does not belong to this crs")
    try:
        return mpcith.sim_prove(crs, td.oracle, stmt, rng, relation=relation)
    except ProgrammingConflict as exc:
        raise SimulationFailure(str(exc)) from exc


__all__ = [
    "MPCITH", "TRANSCRIPT_CHECK", "BACKENDS", "REL_V", "REL_P",
    "NizkCrs", "Trapdoor", "Statement", "Witness", "Relation",
    "FalseStatement", "SimulationFailure", "UnknownRelation", "ProgrammableOracle", "ProgrammingConflict",
    "crs_length", "default_rounds", "nizk_setup", "nizk_sim_setup", "nizk_prove", "nizk_verify",
    "nizk_sim_prove", "relation_check", "relation_for", "search_forgery",
]
