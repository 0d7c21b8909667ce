"""Battery figures of merit: stored energy, energy fluctuation, concurrence."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .dynamics import propagate_heisenberg
from .model import SystemParams
from .operators import SIGMA_Y, eigvals_general, hermitian_defect, symmetrize
from .states import DensityMatrix

SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)

STATE_TOL = 1e-7
EIG_ERROR_TOL = 1e-6
VARIANCE_CLIP = 1e-10


class ObservableError(ValueError):
    pass


@dataclass(frozen=True)
class ObservableRecord:
    lambda_t: float
    energy_norm: float
    fluctuation_norm: float
    concurrence: float
    photon_number: float
    qubit1_excitation: float
    trace_error: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list[float]:
        return [getattr(self, c) for c in self.columns()]


def stored_energy(rho_t: DensityMatrix, rho0: DensityMatrix, hqb) -> float:
    """``Tr(rho(t) H_QB) - Tr(rho(0) H_QB)``."""
    if rho_t.matrix.shape != rho0.matrix.shape or rho0.matrix.shape != np.shape(hqb):
        raise ValueError("dimension mismatch between states and H_QB")
    return rho_t.expect(hqb) - rho0.expect(hqb)


def _trace_product(a, b) -> complex:
    return complex(np.einsum("ij,ji->", a, b))


def energy_fluctuation(
    p: SystemParams, rho0: DensityMatrix, hqb, t_grid, **propagate_kw
) -> np.ndarray:
    """Standard deviation of ``H_QB(t) - H_QB(0)`` in the initial state.

    ``H_QB`` and ``H_QB^2`` are each propagated with the adjoint Lindblad
    generator (the two are not related by squaring once dissipation is on).
    Both traces are taken against ``rho(0)``.
    """
    h = np.asarray(hqb, dtype=complex)
    h2 = h @ h
    r0 = rho0.matrix

    def first(t, x1):
        d1 = _trace_product(r0, x1 - h)
        cross = _trace_product(r0, -x1 @ h - h @ x1 + h2)
        return d1, cross

    firsts = propagate_heisenberg(h, p, t_grid, observer=first, **propagate_kw)
    seconds = propagate_heisenberg(h2, p, t_grid, observer=lambda t, x2: _trace_product(r0, x2), **propagate_kw)

    out = np.empty(len(firsts))
    for i, ((d1, cross), x2) in enumerate(zip(firsts, seconds)):
        var = (x2 + cross).real - d1.real**2
        if var < -VARIANCE_CLIP:
            raise ObservableError(
                f"negative energy variance {var:.3e} at t = {t_grid[i]:.6g}; integration is inaccurate"
            )
        out[i] = np.sqrt(max(var, 0.0))
    return out


def concurrence(rho_2q) -> float:
    """Wootters concurrence ``max(0, R1 - R2 - R3 - R4)`` of a two-qubit state."""
    rho = np.asarray(rho_2q, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-qubit matrix, got shape {rho.shape}")
    if hermitian_defect(rho) > STATE_TOL:
        raise ObservableError(f"state is not Hermitian (defect {hermitian_defect(rho):.2e})")
    tr = complex(np.trace(rho))
    if abs(tr - 1) > STATE_TOL:
        raise ObservableError(f"state trace {tr:.10g} differs from 1")
    rho = symmetrize(rho) / tr.real
    spin_flipped = SIGMA_YY @ rho.conj() @ SIGMA_YY
    ev = eigvals_general(rho @ spin_flipped)
    if np.any(np.abs(ev.imag) > EIG_ERROR_TOL) or np.any(ev.real < -EIG_ERROR_TOL):
        raise ObservableError(f"spin-flipped product has invalid eigenvalues {ev}")
    # R_i squared are the eigenvalues above; as singular values of
    # sqrt(rho) YY sqrt(rho)* they avoid the sqrt blow-up of roundoff zeros.
    w, v = np.linalg.eigh(rho)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    r = np.linalg.svd(root @ SIGMA_YY @ root.conj(), compute_uv=False)
    return float(min(1.0, max(0.0, r[0] - r[1] - r[2] - r[3])))


def parametric_pairs(records, window=(0.0, 1.3), x: str = "energy") -> list[tuple[float, float]]:
    """``(x_value, concurrence)`` pairs, in time order, for ``lambda_t`` inside ``window``.

    ``records`` is a sequence of :class:`ObservableRecord` (for instance the
    records of a simulated trajectory).
    """
    key = {"energy": "energy_norm", "fluctuation": "fluctuation_norm"}.get(x)
    if key is None:
        raise ValueError(f"x must be 'energy' or 'fluctuation', got {x!r}")
    lo, hi = window
    if lo > hi:
        raise ValueError(f"window lower bound {lo} exceeds upper bound {hi}")
    times = np.array([r.lambda_t for r in records])
    eps = 1e-9 * max(1.0, float(np.max(np.abs(times))) if len(times) else 1.0)
    if len(times) == 0 or lo < times[0] - eps or hi > times[-1] + eps:
        raise ValueError(f"window [{lo}, {hi}] lies outside the trajectory range")
    pairs = [(getattr(r, key), r.concurrence) for r, t in zip(records, times) if lo - eps <= t <= hi + eps]
    if not pairs:
        raise ValueError(f"no trajectory points fall inside window [{lo}, {hi}]")
    return pairs
