"""Sigma protocols usable by the compiler."""
from .base import (InvalidWitness, PinConflict, SigmaBackend, SigmaError, backend_from_descriptor, layout_p3,
                   make_backend)
from .hamiltonicity import Hamiltonicity

__all__ = ["InvalidWitness", "PinConflict", "SigmaBackend", "SigmaError", "backend_from_descriptor",
           "layout_p3", "make_backend", "Hamiltonicity"]
