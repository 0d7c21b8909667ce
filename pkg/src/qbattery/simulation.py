"""End-to-end runs: propagate, then reduce every state to an observable record."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ATOL, RTOL, propagate
from .model import (
    SystemParams,
    build_hqb,
    build_initial_state,
    number_operator,
    qubit_excitation,
)
from .observables import ObservableRecord, concurrence, energy_fluctuation
from .operators import QUBIT1, partial_trace_cavity
from .states import Trajectory


@dataclass
class SimulationResult:
    params: SystemParams
    records: list[ObservableRecord]
    trajectory: Trajectory

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def lambda_t(self) -> np.ndarray:
        return self.column("lambda_t")


def scaled_grid(t_max: float, n_points: int) -> np.ndarray:
    """Uniform grid on the scaled axis ``lambda t`` in ``[0, t_max]``."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if n_points == 1:
        return np.zeros(1)
    return np.linspace(0.0, t_max, n_points)


def simulate(
    p: SystemParams,
    t_max: float = 15.0,
    n_points: int = 600,
    *,
    method: str = "adaptive_rk",
    fluctuation: bool = True,
    diagnostics: bool = True,
    rtol: float = RTOL,
    atol: float = ATOL,
    backend: str | None = None,
) -> SimulationResult:
    """Run one parameter point on ``n_points`` scaled times ``lambda t in [0, t_max]``."""
    space = p.space
    rho0 = build_initial_state(p, space)
    hqb = build_hqb(p, space)
    n_op = number_operator(space)
    q1 = qubit_excitation(QUBIT1, space)
    e0 = rho0.expect(hqb)
    lam_t = scaled_grid(t_max, n_points)
    t_grid = lam_t / p.lam

    def observe(t, state):
        return (
            (state.expect(hqb) - e0) / p.omega_q,
            concurrence(partial_trace_cavity(state.matrix, space)),
            state.expect(n_op),
            state.expect(q1),
            state.trace_error,
        )

    kw = dict(rtol=rtol, atol=atol) if method == "adaptive_rk" else {}
    traj = propagate(
        rho0, p, t_grid, method, observer=observe, diagnostics=diagnostics, backend=backend, **kw
    )
    if fluctuation:
        sigma = energy_fluctuation(p, rho0, hqb, t_grid, rtol=rtol, atol=atol, backend=backend) / p.omega_q
    else:
        sigma = np.full(len(t_grid), np.nan)
    records = [
        ObservableRecord(float(lt), e, float(s), c, n, q, err)
        for lt, (e, c, n, q, err), s in zip(lam_t, traj.records, sigma)
    ]
    return SimulationResult(p, records, traj)
