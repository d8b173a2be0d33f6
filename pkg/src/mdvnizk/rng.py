"""Seeded randomness: one root seed fans out into labeled, independent streams."""
from __future__ import annotations

import hashlib

import numpy as np


def make_rng(seed: int | bytes | None = None, label: str = "") -> np.random.Generator:
    if seed is None:
        return np.random.default_rng()
    if isinstance(seed, int):
        seed = seed.to_bytes(16, "little", signed=False)
    digest = hashlib.sha256(b"mdvnizk/rng\x00" + label.encode() + b"\x00" + seed).digest()
    return np.random.default_rng(np.frombuffer(digest, dtype=np.uint32))


def child(rng: np.random.Generator, label: str) -> np.random.Generator:
    """Derive an independent stream from ``rng`` for a named component."""
    return make_rng(rng.bytes(32), label)


def ensure(rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng()


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)
