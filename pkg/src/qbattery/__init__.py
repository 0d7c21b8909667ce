"""Cavity-charged two-qubit quantum battery simulator."""

__version__ = "0.1.0"

from .model import SystemParams, TruncationError, build_hamiltonian, build_initial_state  # noqa: E402
from .dynamics import PropagationError, propagate, propagate_heisenberg  # noqa: E402
from .observables import concurrence, energy_fluctuation, stored_energy  # noqa: E402
from .simulation import simulate  # noqa: E402

__all__ = [
    "SystemParams",
    "TruncationError",
    "build_hamiltonian",
    "build_initial_state",
    "PropagationError",
    "propagate",
    "propagate_heisenberg",
    "concurrence",
    "energy_fluctuation",
    "stored_energy",
    "simulate",
]
