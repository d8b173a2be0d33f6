"""Programmable random oracle for the Fiat-Shamir transform.

The default answer to a query is SHAKE-256 of the oracle key and the query.
A simulator holding the oracle may force answers; each query can be
programmed once, and programming a query that was already answered
differently is an error rather than a silent overwrite.
"""
from __future__ import annotations

import hashlib


class ProgrammingConflict(RuntimeError):
    pass


class ProgrammableOracle:
    def __init__(self, key: bytes):
        self.key = bytes(key)
        self._table: dict[bytes, bytes] = {}
        self._seen: dict[bytes, bytes] = {}
        self.queries = 0

    def _default(self, query: bytes, nbytes: int) -> bytes:
        return hashlib.shake_256(b"mdvnizk/ro\x00" + self.key + query).digest(nbytes)

    def query(self, query: bytes, nbytes: int) -> bytes:
        self.queries += 1
        if query in self._table:
            out = self._table[query]
            if len(out) < nbytes:
                raise ProgrammingConflict("programmed answer is shorter than requested")
            return out[:nbytes]
        out = self._default(query, nbytes)
        self._seen[query] = out
        return out

    def program(self, query: bytes, answer: bytes) -> None:
        if query in self._table:
            raise ProgrammingConflict("query already programmed")
        if query in self._seen and not self._seen[query].startswith(answer):
            raise ProgrammingConflict("query was already answered with a different value")
        self._table[query] = bytes(answer)

    @property
    def programmed(self) -> int:
        return len(self._table)

    def trits(self, query: bytes, count: int) -> list[int]:
        """``count`` values in {0, 1, 2}, one per answer byte (bytes >= 255 skipped)."""
        return answer_to_trits(self.query(query, trit_bytes(count)), count)

    def program_trits(self, query: bytes, trits) -> None:
        self.program(query, trits_to_answer(trits))


def trit_bytes(count: int) -> int:
    # room for rejection; 255 is the only rejected value
    return count + 16


def answer_to_trits(answer: bytes, count: int) -> list[int]:
    out = []
    for byte in answer:
        if byte == 255:
            continue
        out.append(byte % 3)
        if len(out) == count:
            return out
    raise ProgrammingConflict("oracle answer too short for the requested trits")


def trits_to_answer(trits) -> bytes:
    """An answer that decodes to ``trits``, padded with zero trits."""
    t = [int(v) for v in trits]
    return bytes(t) + bytes(16)
