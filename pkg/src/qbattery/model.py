"""Charger + two-qubit battery: parameters, Hamiltonian, dissipators, initial state.

Energies are in units of the qubit frequency ``omega_q`` and the detuning is
``Delta = omega_c - omega_q``.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .operators import (
    CAVITY,
    GROUND,
    QUBIT1,
    QUBIT2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    CompositeSpace,
    destroy,
    embed,
)
from .states import DensityMatrix

TAIL_WEIGHT_TOL = 1e-8
MAX_DEFAULT_N_CAVITY = 60

DETUNING_CONVENTION = "Delta = omega_c - omega_q"


class TruncationError(ValueError):
    pass


def default_n_cavity(alpha) -> int:
    a = abs(alpha)
    return min(math.ceil(a * a + 6 * a + 10), MAX_DEFAULT_N_CAVITY)


def coherent_tail_weight(alpha, n_cavity: int) -> float:
    """Probability mass of ``|alpha>`` on Fock levels ``n >= n_cavity``."""
    return float(poisson.sf(n_cavity - 1, abs(alpha) ** 2))


def minimal_n_cavity(alpha, tol: float = TAIL_WEIGHT_TOL) -> int:
    n = 1
    while coherent_tail_weight(alpha, n) >= tol:
        n += 1
    return n


@dataclass(frozen=True)
class SystemParams:
    """Physical and truncation parameters.

    ``lam`` is the charger/qubit-1 coupling (``lambda`` is reserved in
    Python).  ``n_cavity=None`` picks ``ceil(|a|^2 + 6|a| + 10)`` capped at 60.
    """

    omega_c: float = 1.0
    omega_q: float = 1.0
    lam: float = 1.0
    g: float = 1.0
    zeta: float = 0.0
    kappa: float = 0.0
    gamma: float = 0.0
    alpha: complex = 2.0
    n_cavity: int | None = None

    def __post_init__(self):
        if self.n_cavity is None:
            object.__setattr__(self, "n_cavity", default_n_cavity(self.alpha))
        if not -1.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in [-1, 1], got {self.zeta}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if int(self.n_cavity) != self.n_cavity or self.n_cavity < 2:
            raise ValueError(f"n_cavity must be an integer >= 2, got {self.n_cavity}")
        object.__setattr__(self, "n_cavity", int(self.n_cavity))
        for name in ("omega_c", "omega_q", "lam", "g", "zeta", "kappa", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not cmath.isfinite(complex(self.alpha)):
            raise ValueError("alpha must be finite")

    @property
    def delta(self) -> float:
        return self.omega_c - self.omega_q

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace(self.n_cavity)

    def replace(self, **changes) -> "SystemParams":
        """Copy with changes; ``delta=`` sets ``omega_c`` relative to ``omega_q``.

        Changing ``alpha`` without an explicit ``n_cavity`` re-derives the
        default truncation.
        """
        if "delta" in changes:
            d = changes.pop("delta")
            changes["omega_c"] = changes.get("omega_q", self.omega_q) + d
        if "alpha" in changes and "n_cavity" not in changes:
            changes["n_cavity"] = None
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        a = complex(self.alpha)
        d["alpha"] = a.real if a.imag == 0 else {"re": a.real, "im": a.imag}
        d["delta"] = self.delta
        return d


def _check_space(p: SystemParams, space: CompositeSpace | None) -> CompositeSpace:
    if space is None:
        return p.space
    if space.n_cavity != p.n_cavity:
        raise ValueError(f"space has n_cavity={space.n_cavity}, params expect {p.n_cavity}")
    return space


def annihilation(space: CompositeSpace) -> np.ndarray:
    return embed(destroy(space.n_cavity), CAVITY, space)


def number_operator(space: CompositeSpace) -> np.ndarray:
    a = destroy(space.n_cavity)
    return embed(a.conj().T @ a, CAVITY, space)


def qubit_excitation(slot: int, space: CompositeSpace) -> np.ndarray:
    return embed(SIGMA_PLUS @ SIGMA_MINUS, slot, space)


def excitation_number(space: CompositeSpace) -> np.ndarray:
    """``a^H a + sigma_+^(1) sigma_-^(1) + sigma_+^(2) sigma_-^(2)``."""
    return number_operator(space) + qubit_excitation(QUBIT1, space) + qubit_excitation(QUBIT2, space)


def build_hamiltonian_parts(p: SystemParams, space: CompositeSpace | None = None):
    """Return ``(H0, H1)``: the diagonal bare part and the couplings."""
    space = _check_space(p, space)
    a = annihilation(space)
    h0 = p.omega_c * number_operator(space) + 0.5 * p.omega_q * (
        embed(SIGMA_Z, QUBIT1, space) + embed(SIGMA_Z, QUBIT2, space)
    )
    charger = embed(SIGMA_PLUS, QUBIT1, space) @ a
    h1 = p.lam * (charger + charger.conj().T)
    xx = embed(SIGMA_X, QUBIT1, space) @ embed(SIGMA_X, QUBIT2, space)
    yy = embed(SIGMA_Y, QUBIT1, space) @ embed(SIGMA_Y, QUBIT2, space)
    h1 = h1 + 0.5 * p.g * ((1 + p.zeta) * xx + (1 - p.zeta) * yy)
    return h0, h1


def build_hamiltonian(p: SystemParams, space: CompositeSpace | None = None) -> np.ndarray:
    h0, h1 = build_hamiltonian_parts(p, space)
    return h0 + h1


def build_collapse_ops(p: SystemParams, space: CompositeSpace | None = None):
    """``[(a, kappa), (sigma_-^(1), gamma), (sigma_-^(2), gamma)]``."""
    space = _check_space(p, space)
    return [
        (annihilation(space), float(p.kappa)),
        (embed(SIGMA_MINUS, QUBIT1, space), float(p.gamma)),
        (embed(SIGMA_MINUS, QUBIT2, space), float(p.gamma)),
    ]


def build_hqb(p: SystemParams, space: CompositeSpace | None = None) -> np.ndarray:
    space = _check_space(p, space)
    return 0.5 * p.omega_q * embed(SIGMA_Z, QUBIT2, space)


def coherent_amplitudes(alpha, n_cavity: int) -> np.ndarray:
    """Truncated coherent-state amplitudes, renormalized to unit norm."""
    alpha = complex(alpha)
    c = np.empty(n_cavity, dtype=complex)
    c[0] = 1.0
    for n in range(1, n_cavity):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c / np.linalg.norm(c)


def build_initial_state(
    p: SystemParams, space: CompositeSpace | None = None, tail_tol: float = TAIL_WEIGHT_TOL
) -> DensityMatrix:
    """``|g g, alpha><g g, alpha|`` with the coherent state truncated to ``n_cavity``.

    Raises :class:`TruncationError` when the discarded Fock tail carries
    weight ``>= tail_tol``.  Small test systems may pass a looser
    ``tail_tol`` to accept a heavily truncated (renormalized) state.
    """
    space = _check_space(p, space)
    tail = coherent_tail_weight(p.alpha, space.n_cavity)
    if tail >= tail_tol:
        raise TruncationError(
            f"n_cavity={space.n_cavity} leaves coherent-state tail weight {tail:.2e} "
            f"(>= {tail_tol:.0e}) for |alpha|={abs(p.alpha):g}; "
            f"use n_cavity >= {minimal_n_cavity(p.alpha, tail_tol)}"
        )
    gg = np.kron(GROUND, GROUND)
    psi = np.kron(coherent_amplitudes(p.alpha, space.n_cavity), gg)
    return DensityMatrix(np.outer(psi, psi.conj()), space)
