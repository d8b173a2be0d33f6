"""Bundled instances for the CLI and experiments."""
from __future__ import annotations

from dataclasses import dataclass

from . import cldm, qsim
from .rng import make_rng
from .sigma import hamiltonicity as ham


@dataclass(frozen=True)
class Instance:
    name: str
    backend: str  # sigma backend name
    x: bytes
    wit: bytes | None  # None for no-instances

    @property
    def yes(self) -> bool:
        return self.wit is not None


def _ham(name, adj, order=None) -> Instance:
    return Instance(name, "ham", ham.encode_graph(adj), None if order is None else ham.encode_cycle(order))


def _cldm(name, inst, state=None) -> Instance:
    return Instance(name, "cldm", inst.to_bytes(), None if state is None else cldm.encode_witness(state))


def _build() -> dict[str, Instance]:
    adj8, order8 = ham.random_hamiltonian_graph(8, make_rng(0, "bundled-ham8"))
    ghz_inst, ghz = cldm.ghz_instance()
    split_inst, split_wit = cldm.split_instance()
    out = [
        _ham("K3", ham.complete_graph(3), [0, 1, 2]),
        _ham("K4", ham.complete_graph(4), [0, 1, 2, 3]),
        _ham("C5", ham.cycle_graph(5), [0, 1, 2, 3, 4]),
        _ham("ham8", adj8, order8),
        _ham("P4", ham.path_graph(4)),
        _ham("P8", ham.path_graph(8)),
        _cldm("cldm-bell", cldm.bell_instance(), qsim.bell_state()),
        _cldm("cldm-ghz", ghz_inst, ghz),
        _cldm("cldm-split", split_inst, split_wit),
        _cldm("cldm-conflict", cldm.conflicting_instance()),
    ]
    return {i.name: i for i in out}


_BUNDLED: dict[str, Instance] | None = None


def bundled() -> dict[str, Instance]:
    global _BUNDLED
    if _BUNDLED is None:
        _BUNDLED = _build()
    return _BUNDLED


def get(name: str) -> Instance:
    try:
        return bundled()[name]
    except KeyError:
        raise KeyError(f"unknown instance {name!r}; bundled: {', '.join(bundled())}") from None
