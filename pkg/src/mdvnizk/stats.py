"""Statistics for the experiments: a two-sample chi-square test over byte
histograms and exact acceptance rates by enumerating the challenge space."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import chi2_contingency

from .rng import ensure

MIN_SAMPLES = 100


@dataclass(frozen=True)
class ChiSquare:
    statistic: float
    p_value: float
    passed: bool

    def __iter__(self):
        return iter((self.statistic, self.p_value, self.passed))


def byte_histogram(samples, bins: int = 256) -> np.ndarray:
    """Counts of byte values pooled over all samples, folded into ``bins`` equal-width bins."""
    if not 1 <= bins <= 256 or 256 % bins:
        raise ValueError("bins must divide 256")
    data = np.frombuffer(b"".join(bytes(s) for s in samples), dtype=np.uint8)
    counts = np.bincount(data, minlength=256)
    return counts.reshape(bins, 256 // bins).sum(axis=1)


def chi_square_same_dist(samples_a, samples_b, bins: int = 256, alpha: float = 0.01) -> ChiSquare:
    """Two-sample chi-square homogeneity test; ``passed`` means not rejected at ``alpha``."""
    samples_a, samples_b = list(samples_a), list(samples_b)
    if len(samples_a) < MIN_SAMPLES or len(samples_b) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples per side")
    table = np.stack([byte_histogram(samples_a, bins), byte_histogram(samples_b, bins)])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2 or (table[0] * table[1].sum() == table[1] * table[0].sum()).all():
        # a single occupied bin or exactly proportional rows: nothing to reject
        return ChiSquare(0.0, 1.0, True)
    stat, p, _, _ = chi2_contingency(table, correction=False)
    return ChiSquare(float(stat), float(p), bool(p >= alpha))


def _with_k(backend, k: int):
    return type(backend)(lam=backend.lam, k=k)


def exhaustive_accept_rate(backend, x: bytes, strategy: str = "cheat", k: int | None = None, wit: bytes | None = None,
                           rng=None) -> Fraction:
    """Exact acceptance fraction of a prover strategy over every challenge.

    ``cheat`` uses the backend's canonical witness-less prover, ``honest``
    needs ``wit``. The first message is fixed once; the rate is over
    challenges only.
    """
    rng = ensure(rng)
    if k is not None:
        backend = _with_k(backend, k)
    n = backend.challenge_length(x)
    if n > 12:
        raise ValueError("challenge space too large to enumerate")
    if strategy == "cheat":
        alpha, state = backend.cheat_commit(x, rng)

        def respond(beta):
            return backend.cheat_respond(state, beta)
    elif strategy == "honest":
        if wit is None:
            raise ValueError("the honest strategy needs a witness")
        r = backend.sample_randomness(x, wit, rng)
        alpha = backend.p1(x, wit, r)

        def respond(beta):
            return backend.p3(x, beta, r)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    hits = total = 0
    for beta in backend.challenge_space(x):
        total += 1
        hits += bool(backend.verify(x, alpha, beta, respond(beta)))
    return Fraction(hits, total)


def binomial_within(count: int, trials: int, p: float, sigmas: float = 3.0) -> bool:
    mean = trials * p
    sd = (trials * p * (1 - p)) ** 0.5
    return abs(count - mean) <= sigmas * sd
