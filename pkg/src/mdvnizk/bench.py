"""Benchmark the numba kernels against the numpy fallback.

    python -m mdvnizk.bench [--repeat 3] [--lanes 64] [--json]

Times plain bit-sliced evaluation and the 3-party MPC evaluation on the
key-consistency circuit (the largest circuit the protocol proves), checks the
two paths agree bit for bit, and prints one row per kernel.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from . import kernels
from .nizk.relations import _rel_v_circuit
from .primitives import pke
from .rng import make_rng


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(repeat: int = 3, lanes: int = 64, lam: int = 32, seed: int = 0) -> list[dict]:
    rng = make_rng(seed, "bench")
    kp = pke.pke_gen(lam, rng)
    c = _rel_v_circuit(kp.pk)
    W = max(1, lanes // 64)
    x = rng.integers(0, 2**63, size=(c.inputs, W), dtype=np.uint64)
    xs = rng.integers(0, 2**63, size=(3, c.inputs, W), dtype=np.uint64)
    tapes = rng.integers(0, 2**63, size=(3, c.n_and, W), dtype=np.uint64)
    cases = {
        "eval_plain": lambda b: kernels.eval_plain(c.ops, c.a, c.b, c.inputs, x, backend=b),
        "mpc_eval": lambda b: kernels.mpc_eval(c.ops, c.a, c.b, c.inputs, xs, tapes, backend=b),
    }
    rows = []
    for name, fn in cases.items():
        row = {"kernel": name, "gates": c.n_gates, "and_gates": c.n_and, "lanes": 64 * W}
        ref = fn("numpy")
        row["numpy_s"] = _best(lambda: fn("numpy"), repeat)
        if kernels.HAVE_NUMBA:
            t0 = time.perf_counter()
            out = fn("numba")  # includes compilation or cache load
            row["numba_first_s"] = time.perf_counter() - t0
            row["numba_s"] = _best(lambda: fn("numba"), repeat)
            row["agree"] = bool(np.array_equal(np.asarray(out), np.asarray(ref)))
            row["speedup"] = row["numpy_s"] / row["numba_s"]
        rows.append(row)
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m mdvnizk.bench", description="numba vs numpy kernel timings")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--lanes", type=int, default=64)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)
    rows = run(args.repeat, args.lanes)
    if args.json:
        for r in rows:
            print(json.dumps(r))
        return 0
    if not kernels.HAVE_NUMBA:
        print("numba disabled or missing; numpy timings only")
    for r in rows:
        line = f"{r['kernel']:<11} gates={r['gates']:>7} lanes={r['lanes']:>4} numpy={r['numpy_s']:.3f}s"
        if "numba_s" in r:
            line += f" numba={r['numba_s']:.3f}s speedup={r['speedup']:.1f}x agree={r['agree']}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
