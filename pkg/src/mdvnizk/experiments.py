"""Experiment runners behind ``mdvnizk stats`` and ``mdvnizk attack-*``.

Each runner is seeded, returns plain dicts (JSON lines) and leaves pass/fail
judgement to the caller, except where a report carries a ``passed`` field.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import adversaries as adv
from . import fhe, qsim, stats
from . import protocol as proto
from .circuits import CircuitBuilder, build_const_circuit, build_prover_circuit, eval_batch
from .instances import get as get_instance
from .nizk import MPCITH
from .nizk.relations import instance_challenge
from .rng import child, make_rng, random_bits
from .sigma import hamiltonicity as ham, make_backend


def completeness(trials: int = 100, lam: int = 32, k_ham: int = 16, k_cldm: int = 8, rounds: int = 16,
                 seed: int = 0, n: int = 8, nizk_backend: str = MPCITH) -> dict:
    """Honest prove/verify on fresh Hamiltonian graphs and on the toy CLDM instances."""
    rng = make_rng(seed, "completeness")
    crs = proto.setup(lam, child(rng, "setup"), rounds)
    pvk, svk = proto.vsetup(crs, child(rng, "vsetup"), nizk_backend)
    hb = make_backend("ham", lam, k_ham)
    cb = make_backend("cldm", lam, k_cldm)
    cldm_pool = [get_instance(name) for name in ("cldm-bell", "cldm-ghz", "cldm-split")]
    ham_ok = cldm_ok = 0
    for i in range(trials):
        trng = child(rng, f"trial-{i}")
        adj, order = ham.random_hamiltonian_graph(n, child(trng, "graph"))
        x, w = ham.encode_graph(adj), ham.encode_cycle(order)
        p = proto.prove(crs, pvk, x, w, hb, child(trng, "ham"), nizk_backend, check_pvk=(i == 0))
        ham_ok += proto.verify(crs, pvk, svk, x, p, hb)
        inst = cldm_pool[i % len(cldm_pool)]
        p = proto.prove(crs, pvk, inst.x, inst.wit, cb, child(trng, "cldm"), nizk_backend, check_pvk=False)
        cldm_ok += proto.verify(crs, pvk, svk, inst.x, p, cb)
    return {"experiment": "completeness", "seed": seed, "trials": trials, "ham_accepted": int(ham_ok),
            "cldm_accepted": int(cldm_ok)}


def reusability(trials: int = 100, lam: int = 32, k: int = 16, rounds: int = 16, seed: int = 0,
                nizk_backend: str = MPCITH) -> dict:
    """One setup and one key pair against many distinct instances."""
    rng = make_rng(seed, "reusability")
    crs = proto.setup(lam, child(rng, "setup"), rounds)
    pvk, svk = proto.vsetup(crs, child(rng, "vsetup"), nizk_backend)
    pvk0, svk0 = pvk.to_bytes(), svk.to_bytes()
    hb = make_backend("ham", lam, k)
    seen: set[bytes] = set()
    accepted = 0
    i = 0
    while len(seen) < trials:
        trng = child(rng, f"trial-{i}")
        i += 1
        n = int(trng.integers(4, 9))
        adj, order = ham.random_hamiltonian_graph(n, child(trng, "graph"), density=0.5)
        x = ham.encode_graph(adj)
        if x in seen:
            continue
        seen.add(x)
        p = proto.prove(crs, pvk, x, ham.encode_cycle(order), hb, child(trng, "prove"), nizk_backend,
                        check_pvk=(len(seen) == 1))
        accepted += proto.verify(crs, pvk, svk, x, p, hb)
    return {"experiment": "reusability", "seed": seed, "instances": len(seen), "accepted": int(accepted),
            "keys_unchanged": pvk.to_bytes() == pvk0 and svk.to_bytes() == svk0}


def attack_naive(trials: int = 100, k: int = 8, lam: int = 32, seed: int = 0, yes: str = "K4", no: str = "P4",
                 fhe_backend: str = fhe.TRANSPARENT) -> list[dict]:
    y, n = get_instance(yes), get_instance(no)
    backend = make_backend(y.backend, lam, k)
    return [adv.run_naive_experiment(seed + i, lam, y.x, y.wit, n.x, backend, fhe_backend=fhe_backend)
            for i in range(trials)]


def attack_fixed(trials: int = 100, k: int = 16, rounds: int = 16, lam: int = 32, seed: int = 0, yes: str = "K4",
                 no: str = "P4", mode: str = "alternate", nizk_backend: str = MPCITH) -> list[dict]:
    """``mode`` is ``inject``, ``consistent`` or ``alternate`` (even trials inject)."""
    rng = make_rng(seed, "attack-fixed-keys")
    crs = proto.setup(lam, child(rng, "setup"), rounds)
    pvk, svk = proto.vsetup(crs, child(rng, "vsetup"), nizk_backend)
    y, n = get_instance(yes), get_instance(no)
    backend = make_backend(y.backend, lam, k)
    out = []
    for i in range(trials):
        m = mode if mode != "alternate" else (adv.INJECT if i % 2 == 0 else adv.CONSISTENT)
        out.append(adv.run_fixed_experiment(seed + i, crs, pvk, svk, y.x, y.wit, n.x, backend, m,
                                            nizk_backend=nizk_backend))
    return out


def honest_control(lam: int = 32, k: int = 16, rounds: int = 16, seed: int = 0, yes: str = "K4") -> dict:
    """The attack harness with an honest prover in place of the adversary."""
    rng = make_rng(seed, "attack-fixed-keys")
    crs = proto.setup(lam, child(rng, "setup"), rounds)
    pvk, svk = proto.vsetup(crs, child(rng, "vsetup"))
    y = get_instance(yes)
    backend = make_backend(y.backend, lam, k)
    oracle = adv.VerdictOracle(lambda x, p: proto.verify_detailed(crs, pvk, svk, x, p, backend))
    accepted = oracle(y.x, proto.prove(crs, pvk, y.x, y.wit, backend, child(rng, "honest")))
    return {"experiment": "honest-control", "seed": seed, "accepted": accepted, "fail_stage": oracle.stages[-1]}


def soundness_exhaustive(k_max: int = 10, lam: int = 32, instance: str = "P4", seed: int = 0) -> dict:
    inst = get_instance(instance)
    backend = make_backend(inst.backend, lam, 1)
    rates = {}
    for k in range(1, k_max + 1):
        rates[k] = stats.exhaustive_accept_rate(backend, inst.x, "cheat", k, rng=make_rng(seed + k, "exhaustive"))
    return {"experiment": "soundness-exhaustive", "instance": instance,
            "rates": {k: str(v) for k, v in rates.items()},
            "exact_2^-k": all(v == Fraction(1, 2 ** k) for k, v in rates.items())}


def random_guess(trials: int = 1600, k: int = 4, lam: int = 32, instance: str = "P4", seed: int = 0) -> dict:
    inst = get_instance(instance)
    backend = make_backend(inst.backend, lam, k)
    rng = make_rng(seed, "random-guess")
    keys = adv.naive_vsetup(lam, backend.challenge_length(inst.x), child(rng, "keys"))
    oracle = adv.naive_oracle(keys, backend)
    count = adv.random_guess_prover(oracle, keys.pvk, inst.x, backend, trials, child(rng, "guess"))
    p = float(stats.exhaustive_accept_rate(backend, inst.x, "cheat", rng=child(rng, "exact")))
    return {"experiment": "random-guess", "seed": seed, "k": k, "trials": trials, "accepted": count,
            "per_trial_p": p, "expected": trials * p, "within_3sigma": stats.binomial_within(count, trials, p)}


def _agreeing_circuits(n: int):
    """Majority-of-three on the first three inputs, XORed with the rest, built two ways."""
    b1 = CircuitBuilder(n)
    w = b1.input_wires()
    maj = b1.or_(b1.or_(b1.and_(w[0:1], w[1:2]), b1.and_(w[0:1], w[2:3])), b1.and_(w[1:2], w[2:3]))
    acc = maj
    for j in range(3, n):
        acc = b1.xor(acc, w[j:j + 1])
    c1 = b1.build(np.concatenate([acc, b1.not_(w[0:1])]))

    b2 = CircuitBuilder(n)
    w = b2.input_wires()
    # maj(a, b, c) = (a AND (b XOR c)) XOR (b AND c)
    maj = b2.xor(b2.and_(w[0:1], b2.xor(w[1:2], w[2:3])), b2.and_(w[1:2], w[2:3]))
    acc = b2.xor(w[n - 1:n], maj) if n > 3 else maj
    for j in range(n - 2, 2, -1):
        acc = b2.xor(acc, w[j:j + 1])
    c2 = b2.build(np.concatenate([acc, b2.not_(b2.not_(b2.not_(w[0:1])))]))
    return c1, c2


def circuits_agree(c1, c2) -> bool:
    """Brute force over every input."""
    n = c1.inputs
    xs = ((np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
    return bool(np.array_equal(eval_batch(c1, xs), eval_batch(c2, xs)))


def circuit_privacy(samples: int = 10_000, lam: int = 32, n: int = 8, seed: int = 0) -> dict:
    rng = make_rng(seed, "circuit-privacy")
    c1, c2 = _agreeing_circuits(n)
    agree = circuits_agree(c1, c2)
    sk = fhe.fhe_gen(lam, rng=child(rng, "key"))
    ct = fhe.fhe_enc(sk, random_bits(child(rng, "x"), n), child(rng, "enc"))
    ra, rb = child(rng, "a"), child(rng, "b")
    a = [fhe.fhe_eval(c1, ct, ra) for _ in range(samples)]
    b = [fhe.fhe_eval(c2, ct, rb) for _ in range(samples)]
    ok = sum(np.array_equal(fhe.fhe_dec(sk, e), fhe.fhe_dec(sk, f)) for e, f in zip(a, b))
    test = stats.chi_square_same_dist([e.to_bytes() for e in a], [f.to_bytes() for f in b])
    return {"experiment": "circuit-privacy", "seed": seed, "samples": samples, "circuits_agree": agree,
            "dec_agreement": ok / samples, "chi2": test.statistic, "p_value": test.p_value, "passed": test.passed}


def malformed_pvks(crs, pvk, svk, count: int, rng) -> list:
    """Verifier keys that no honest key generation produces."""
    other, _ = proto.vsetup(crs, child(rng, "other"))
    out = []
    for i in range(count):
        kind = i % 5
        r = child(rng, f"bad-{i}")
        if kind == 0:  # flipped bit in pi_V
            pi = bytearray(pvk.pi_v)
            pi[int(r.integers(4, len(pi)))] ^= 1 << int(r.integers(8))
            out.append(proto.PublicVerKey(pvk.c_v, pvk.c_rv, bytes(pi)))
        elif kind == 1:  # c_V from another key pair
            out.append(proto.PublicVerKey(other.c_v, pvk.c_rv, pvk.pi_v))
        elif kind == 2:  # c_rV from another key pair
            out.append(proto.PublicVerKey(pvk.c_v, other.c_rv, pvk.pi_v))
        elif kind == 3:  # truncated pi_V
            out.append(proto.PublicVerKey(pvk.c_v, pvk.c_rv, pvk.pi_v[:int(r.integers(1, len(pvk.pi_v)))]))
        else:  # flipped bit in c_rV
            ct = bytearray(pvk.c_rv)
            ct[int(r.integers(0, len(ct)))] ^= 1 << int(r.integers(8))
            out.append(proto.PublicVerKey(pvk.c_v, bytes(ct), pvk.pi_v))
    return out


def simulator(trials: int = 100, malformed: int = 100, samples: int = 1000, lam: int = 32, k: int = 16,
              rounds: int = 16, seed: int = 0, instance: str = "K4") -> dict:
    """Simulated proofs against honest keys, bottom on malformed keys, and length/distribution checks."""
    rng = make_rng(seed, "simulator")
    crs, td = proto.sim_setup(lam, child(rng, "setup"), rounds)
    inst = get_instance(instance)
    backend = make_backend(inst.backend, lam, k)
    accepted = 0
    same_lengths = True
    for i in range(trials):
        trng = child(rng, f"trial-{i}")
        pvk, svk = proto.vsetup(crs, child(trng, "vsetup"))
        adj, order = ham.random_hamiltonian_graph(int(trng.integers(4, 9)), child(trng, "graph"))
        x = ham.encode_graph(adj)
        sp = proto.sim_prove(td, crs, pvk, x, backend, child(trng, "sim"))
        accepted += sp is not None and proto.verify(crs, pvk, svk, x, sp, backend)
        if i < 5:
            rp = proto.prove(crs, pvk, x, ham.encode_cycle(order), backend, child(trng, "real"), check_pvk=False)
            same_lengths &= sp is not None and sp.field_lengths() == rp.field_lengths()

    pvk, svk = proto.vsetup(crs, child(rng, "main-vsetup"))
    bottoms = sum(proto.sim_prove(td, crs, bad, inst.x, backend, child(rng, f"bad-{j}")) is None
                  for j, bad in enumerate(malformed_pvks(crs, pvk, svk, malformed, child(rng, "malformed"))))

    # evc_P: real evaluations of C_{x,r} against simulated constant-circuit evaluations
    c_v = fhe.FheCiphertext.from_bytes(pvk.c_v)
    beta = instance_challenge(svk.prfk.key_bits, inst.x, backend)
    srng, rrng = child(rng, "evc-sim"), child(rng, "evc-real")
    sim_evc, real_evc = [], []
    for _ in range(samples):
        _, gamma = backend.simulate(inst.x, beta, srng)
        sim_evc.append(fhe.fhe_eval(build_const_circuit(gamma, lam), c_v, srng).to_bytes())
        r = backend.sample_randomness(inst.x, inst.wit, rrng)
        real_evc.append(fhe.fhe_eval(build_prover_circuit(inst.x, r, backend), c_v, rrng).to_bytes())
    test = stats.chi_square_same_dist(sim_evc, real_evc)
    return {"experiment": "simulator", "seed": seed, "trials": trials, "sim_accepted": int(accepted),
            "malformed": malformed, "bottom": int(bottoms), "same_field_lengths": bool(same_lengths),
            "evc_samples": samples, "evc_p_value": test.p_value, "evc_passed": test.passed}


def qsim_checks(operations: int = 10_000, seed: int = 0) -> dict:
    """Pad averaging, Bell marginal, and invariants under a random walk of operations."""
    rng = make_rng(seed, "qsim")
    pad_err = 0.0
    for n in (1, 2, 3):
        for _ in range(3):
            s = qsim.random_state(n, rng)
            pad_err = max(pad_err, float(np.abs(qsim.pad_average(s).rho - np.eye(1 << n) / (1 << n)).max()))
    bell_err = float(np.abs(qsim.partial_trace(qsim.bell_state(), [0]).rho - np.eye(2) / 2).max())
    state = qsim.random_state(2, rng)
    violations = 0
    for _ in range(operations):
        op = int(rng.integers(6))
        try:
            if op == 0:
                state = qsim.apply_unitary(state, qsim.random_unitary(state.dim, rng))
            elif op == 1:
                state = qsim.apply_qotp(state, random_bits(rng, state.n), random_bits(rng, state.n))
            elif op == 2 and state.n > 1:
                keep = sorted(rng.choice(state.n, size=int(rng.integers(1, state.n)), replace=False).tolist())
                state = qsim.partial_trace(state, keep)
            elif op == 3 and state.n < 3:
                state = qsim.tensor(state, qsim.random_state(1, rng, rank=int(rng.integers(1, 3))))
            elif op == 4:
                state = qsim.mix([state, qsim.random_state(state.n, rng)], [rng.random() + 0.01, rng.random()])
            elif op == 5:
                state = qsim.permute_qubits(state, rng.permutation(state.n))
            qsim.check_density(state.rho, state.n)
        except qsim.StateError:
            violations += 1
    return {"experiment": "qsim", "seed": seed, "pad_error": pad_err, "bell_error": bell_err,
            "operations": operations, "violations": violations}


__all__ = ["completeness", "reusability", "attack_naive", "attack_fixed", "honest_control", "soundness_exhaustive",
           "random_guess", "circuit_privacy", "circuits_agree", "simulator", "qsim_checks", "malformed_pvks"]
