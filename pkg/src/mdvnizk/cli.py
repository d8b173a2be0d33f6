"""Command-line front end.

Exit codes: 0 success, 1 verification rejected, 2 usage error, 3 internal error.
Every flag in RunConfig can also come from an ``MDVNIZK_<NAME>`` environment
variable (for example ``MDVNIZK_LAMBDA=48``); explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import experiments as exp
from . import fhe
from . import protocol as proto
from .bits import DecodeError
from .circuits import UnsupportedBackend
from .instances import Instance, bundled, get as get_instance
from .nizk import BACKENDS as NIZK_BACKENDS, MPCITH
from .rng import make_rng
from .sigma import make_backend

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
MAX_LAMBDA = 512


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    lam: int = 32
    backend: str = "ham"
    fhe_backend: str = fhe.TRANSPARENT
    nizk_backend: str = MPCITH
    k: int | None = None
    t: int = 16
    seed: int = 0
    lambda_policy: str = "fixed"  # "fixed" or "leveraged:<eps>"

    def resolve_lambda(self, x: bytes | None = None) -> int:
        if self.lambda_policy == "fixed":
            return self.lam
        if not self.lambda_policy.startswith("leveraged:"):
            raise UsageError(f"unknown lambda policy {self.lambda_policy!r}")
        try:
            eps = float(self.lambda_policy.split(":", 1)[1])
        except ValueError:
            raise UsageError("leveraged policy needs a number, e.g. leveraged:4") from None
        if x is None:
            raise UsageError("the leveraged lambda policy needs an instance")
        lam = proto.leveraged_lambda(x, eps)
        if lam > MAX_LAMBDA:
            raise UsageError(f"leveraged lambda {lam} exceeds the supported maximum {MAX_LAMBDA}")
        return lam


# -- I/O helpers ------------------------------------------------------------------------

def write_atomic(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_file(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def emit(records, out: str | None) -> None:
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if out:
        write_atomic(out, text.encode())
    else:
        sys.stdout.write(text)


def _env(name: str, default, cast=str):
    raw = os.environ.get(f"MDVNIZK_{name}")
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"MDVNIZK_{name}={raw!r} is not a valid value") from None


def _instance(args) -> Instance:
    if getattr(args, "instance", None):
        try:
            return get_instance(args.instance)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    if not getattr(args, "x", None):
        raise UsageError("give --instance NAME or --x FILE")
    wit = read_file(args.wit) if getattr(args, "wit", None) else None
    return Instance(str(args.x), args.backend, read_file(args.x), wit)


def _config(args) -> RunConfig:
    cfg = RunConfig(lam=args.lam, backend=args.backend, fhe_backend=args.fhe_backend, nizk_backend=args.nizk_backend,
                    k=args.k, t=args.t, seed=args.seed, lambda_policy=args.lambda_policy)
    if cfg.lam < 16 or cfg.lam % 8 or cfg.lam > MAX_LAMBDA:
        raise UsageError("--lambda must be a multiple of 8 between 16 and 512")
    return cfg


def _require_transparent(cfg: RunConfig) -> None:
    if cfg.fhe_backend != fhe.TRANSPARENT:
        raise UnsupportedBackend("the compiled protocol's consistency proofs cover the transparent FHE backend only")


def _load_crs(path) -> proto.Crs:
    try:
        return proto.Crs.from_bytes(read_file(path))
    except DecodeError as exc:
        raise UsageError(f"malformed crs: {exc}") from None


def _load_keys(args):
    try:
        pvk = proto.PublicVerKey.from_bytes(read_file(args.pvk))
        svk = proto.SecretVerKey.from_bytes(read_file(args.svk)) if getattr(args, "svk", None) else None
    except DecodeError as exc:
        raise UsageError(f"malformed key file: {exc}") from None
    return pvk, svk


# -- commands ---------------------------------------------------------------------------

def cmd_setup(args) -> int:
    cfg = _config(args)
    _require_transparent(cfg)
    lam = cfg.resolve_lambda(_instance(args).x if cfg.lambda_policy != "fixed" else None)
    crs = proto.setup(lam, make_rng(cfg.seed, "cli-setup"), cfg.t)
    write_atomic(args.out, crs.to_bytes())
    return EXIT_OK


def cmd_keygen(args) -> int:
    cfg = _config(args)
    _require_transparent(cfg)
    crs = _load_crs(args.crs)
    pvk, svk = proto.vsetup(crs, make_rng(cfg.seed, "cli-keygen"), cfg.nizk_backend)
    write_atomic(args.pvk, pvk.to_bytes())
    write_atomic(args.svk, svk.to_bytes())
    return EXIT_OK


def cmd_prove(args) -> int:
    cfg = _config(args)
    _require_transparent(cfg)
    crs = _load_crs(args.crs)
    cfg.lam = crs.lam
    pvk, _ = _load_keys(args)
    inst = _instance(args)
    if inst.wit is None:
        raise UsageError(f"instance {inst.name} has no witness")
    proof = proto.prove(crs, pvk, inst.x, inst.wit, _sigma_for(cfg, inst), make_rng(cfg.seed, "cli-prove"),
                        cfg.nizk_backend)
    if proof is proto.ABORT:
        print("prover aborted: the verifier key proof does not check", file=sys.stderr)
        return EXIT_REJECT
    write_atomic(args.out, proof.to_bytes())
    return EXIT_OK


_REASONS = {"parse": "malformed proof", "pi_p": "consistency proof rejected", "sigma": "sigma verification failed"}


def cmd_verify(args) -> int:
    cfg = _config(args)
    crs = _load_crs(args.crs)
    cfg.lam = crs.lam
    pvk, svk = _load_keys(args)
    if svk is None:
        raise UsageError("verify needs --svk")
    inst = _instance(args)
    verdict = proto.verify_detailed(crs, pvk, svk, inst.x, read_file(args.proof), _sigma_for(cfg, inst))
    if verdict.accepted:
        print("accept")
        return EXIT_OK
    print(f"reject: {_REASONS[verdict.stage]}", file=sys.stderr)
    return EXIT_REJECT


def cmd_simulate(args) -> int:
    """Simulated crs, honest verifier keys, simulated proof, honest verification, in one process.

    Programmed oracle answers live in memory, so the written proof only
    verifies against the in-process crs; the file is for inspection.
    """
    cfg = _config(args)
    _require_transparent(cfg)
    rng = make_rng(cfg.seed, "cli-simulate")
    inst = _instance(args)
    crs, td = proto.sim_setup(cfg.lam, rng, cfg.t)
    pvk, svk = proto.vsetup(crs, rng)
    backend = _sigma_for(cfg, inst)
    proof = proto.sim_prove(td, crs, pvk, inst.x, backend, rng)
    if proof is None:
        emit([{"experiment": "simulate", "seed": cfg.seed, "output": "bottom"}], None)
        return EXIT_REJECT
    accepted = proto.verify(crs, pvk, svk, inst.x, proof, backend)
    if args.out:
        write_atomic(args.out, proof.to_bytes())
    emit([{"experiment": "simulate", "seed": cfg.seed, "instance": inst.name, "accepted": accepted,
           "field_lengths": list(proof.field_lengths())}], None)
    return EXIT_OK if accepted else EXIT_REJECT


def _sigma_for(cfg: RunConfig, inst: Instance):
    return make_backend(inst.backend, cfg.lam, cfg.k)


def cmd_attack_naive(args) -> int:
    cfg = _config(args)
    yes, no = get_instance(args.yes), get_instance(args.no)
    if yes.backend != no.backend:
        raise UsageError("the two instances must use the same sigma backend")
    records = exp.attack_naive(args.trials, cfg.k or 8, cfg.lam, cfg.seed, args.yes, args.no, cfg.fhe_backend)
    emit(records, args.out)
    return EXIT_OK


def cmd_attack_fixed(args) -> int:
    cfg = _config(args)
    _require_transparent(cfg)
    records = exp.attack_fixed(args.trials, cfg.k or 16, cfg.t, cfg.lam, cfg.seed, args.yes, args.no, args.mode,
                               cfg.nizk_backend)
    emit(records, args.out)
    return EXIT_OK


_STATS = {
    "completeness": lambda a, c: exp.completeness(a.trials or 100, c.lam, c.k or 16, 8, c.t, c.seed,
                                                  nizk_backend=c.nizk_backend),
    "reusability": lambda a, c: exp.reusability(a.trials or 100, c.lam, c.k or 16, c.t, c.seed, c.nizk_backend),
    "exhaustive": lambda a, c: exp.soundness_exhaustive(a.k_max, c.lam, a.instance or "P4", c.seed),
    "random-guess": lambda a, c: exp.random_guess(a.trials or 1600, c.k if c.k is not None else 4, c.lam,
                                                  a.instance or "P4", c.seed),
    "circuit-privacy": lambda a, c: exp.circuit_privacy(a.samples or 10_000, c.lam, seed=c.seed),
    "simulator": lambda a, c: exp.simulator(a.trials or 100, a.trials or 100, a.samples or 1000, c.lam, c.k or 16,
                                            c.t, c.seed, a.instance or "K4"),
    "qsim": lambda a, c: exp.qsim_checks(a.samples or 10_000, c.seed),
    "honest-control": lambda a, c: exp.honest_control(c.lam, c.k or 16, c.t, c.seed),
}


def cmd_stats(args) -> int:
    cfg = _config(args)
    emit([_STATS[args.experiment](args, cfg)], args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=int, default=_env("LAMBDA", 32, int))
    common.add_argument("--backend", choices=("ham", "cldm"), default=_env("BACKEND", "ham"))
    common.add_argument("--fhe-backend", choices=(fhe.TRANSPARENT, fhe.LATTICE),
                        default=_env("FHE_BACKEND", fhe.TRANSPARENT))
    common.add_argument("--nizk-backend", choices=NIZK_BACKENDS, default=_env("NIZK_BACKEND", MPCITH))
    common.add_argument("--k", type=int, default=_env("K", None, int), help="sigma repetitions")
    common.add_argument("--t", "--rounds", dest="t", type=int, default=_env("T", 16, int), help="NIZK rounds")
    common.add_argument("--seed", type=int, default=_env("SEED", 0, int))
    common.add_argument("--lambda-policy", default=_env("LAMBDA_POLICY", "fixed"),
                        help="fixed or leveraged:<eps>")

    def inst(p, wit=False):
        p.add_argument("--instance", help="bundled instance: " + ", ".join(bundled()))
        p.add_argument("--x", help="instance file")
        if wit:
            p.add_argument("--wit", help="witness file")

    ap = argparse.ArgumentParser(prog="mdvnizk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", parents=[common], help="sample a crs")
    p.add_argument("--out", required=True)
    inst(p)
    p.set_defaults(fn=cmd_setup)

    p = sub.add_parser("keygen", parents=[common], help="verifier key pair with its consistency proof")
    p.add_argument("--crs", required=True)
    p.add_argument("--pvk", required=True)
    p.add_argument("--svk", required=True)
    p.set_defaults(fn=cmd_keygen)

    p = sub.add_parser("prove", parents=[common], help="prove a yes-instance")
    for f in ("--crs", "--pvk", "--out"):
        p.add_argument(f, required=True)
    inst(p, wit=True)
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("verify", parents=[common], help="verify a proof with the secret key")
    for f in ("--crs", "--pvk", "--svk", "--proof"):
        p.add_argument(f, required=True)
    inst(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", parents=[common], help="run the zero-knowledge simulator in-process")
    p.add_argument("--out")
    inst(p)
    p.set_defaults(fn=cmd_simulate)

    for name, fn, yes, no in (("attack-naive", cmd_attack_naive, "K4", "P4"),
                              ("attack-fixed", cmd_attack_fixed, "K4", "P4")):
        p = sub.add_parser(name, parents=[common], help=f"{name.split('-')[1]}-protocol challenge-decoding attack")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--yes", default=yes)
        p.add_argument("--no", default=no)
        p.add_argument("--out")
        if name == "attack-fixed":
            p.add_argument("--mode", choices=("inject", "consistent", "alternate"), default="alternate")
        p.set_defaults(fn=fn)

    p = sub.add_parser("stats", parents=[common], help="run one experiment and print a JSON line")
    p.add_argument("experiment", choices=sorted(_STATS))
    p.add_argument("--trials", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--instance")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stats)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.fn(args)
    except (UsageError, UnsupportedBackend, KeyError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
