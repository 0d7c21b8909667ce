"""Four-level reduced model, transcribed term by term and solved with ``exp(tA)``.

The right-hand side is reproduced exactly as published, including terms that
break trace preservation and Hermiticity (for example ``Delta_2 rho_22``
with a complex ``Delta_2``).  Nothing here is corrected; use
:func:`compare_reduced_vs_full` to see how far it departs from the full
Lindblad model.

Components are indexed ``rho[i][j]`` with ``i, j in 1..4``; the generator
acts on the 16-vector ``vec[4*(i-1) + (j-1)]``.  Rows for ``i <= j`` are the
published equations.  Rows for ``i > j`` are their complex conjugates with
every ``rho_kl`` replaced by ``rho_lk``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import SystemParams
from .observables import ObservableError, concurrence
from .operators import CompositeSpace, expm, partial_trace_cavity
from .states import DensityMatrix

UPPER = [(i, j) for i in range(1, 5) for j in range(i, 5)]
RK_AGREEMENT_TOL = 1e-8


class ReducedModelError(RuntimeError):
    pass


def vindex(i: int, j: int) -> int:
    return 4 * (i - 1) + (j - 1)


@dataclass(frozen=True)
class ReducedCoefficients:
    x0: float
    x1: float
    r0: float
    r1: float
    Delta0: complex
    Delta1: complex
    Delta2: complex
    Delta3: complex
    theta0: float
    theta1: float
    theta2: float

    @classmethod
    def from_params(cls, p: SystemParams, n: int) -> "ReducedCoefficients":
        if int(n) != n or n < 1:
            raise ValueError(f"photon-sector parameter n must be an integer >= 1, got {n}")
        lam, kap, gam = p.lam, p.kappa, p.gamma
        wc, wq = p.omega_c, p.omega_q
        r0 = math.sqrt(n - 1)
        r1 = math.sqrt(n)
        th0 = (n - 2) * wc + wq
        th1 = (n - 1) * wc
        th2 = n * wc + wq
        return cls(
            x0=lam * math.sqrt(n - 1),
            x1=lam * math.sqrt(n + 1),
            r0=r0,
            r1=r1,
            Delta0=1j * th1 - 1j * th0 - (3 * gam + r0**2 * kap) / 2,
            Delta1=1j * th2 - 1j * th0 - (gam + r1**2 * kap),
            Delta2=1j * p.g * p.zeta - r0**2 * kap / 2,
            Delta3=-gam - r0**2 * kap,
            theta0=th0,
            theta1=th1,
            theta2=th2,
        )


def published_terms(p: SystemParams, n: int) -> dict:
    """``{(i, j): [(coefficient, (k, l)), ...]}`` for the ten published equations."""
    c = ReducedCoefficients.from_params(p, n)
    x0, x1, r0, r1 = c.x0, c.x1, c.r0, c.r1
    g, k = p.gamma, p.kappa
    D0, D1, D2, D3 = c.Delta0, c.Delta1, c.Delta2, c.Delta3
    D2c = D2.conjugate()
    i = 1j
    return {
        (1, 1): [(-2 * g, (1, 1)), (i * x0, (1, 2)), (i * x0, (1, 3)), (-i * x0, (2, 1)),
                 (r0**2 * k, (2, 2)), (r0**2 * k, (3, 3)), (-i * x0, (3, 1))],
        (1, 2): [(i * x0, (1, 1)), (D0, (1, 2)), (i * x1, (1, 4)), (i * x0, (2, 2)),
                 (r0 * r1 * k, (2, 4)), (-i * x0, (3, 2))],
        (1, 3): [(i * x0, (1, 1)), (i * x1, (1, 4)), (D0, (1, 3)), (i * x0, (2, 3)),
                 (r0 * r1 * k, (3, 4)), (-i * x0, (3, 1))],
        (1, 4): [(i * x1, (1, 2)), (i * x1, (1, 3)), (D1, (1, 4)), (-i * x0, (3, 4)), (-i * x0, (2, 4))],
        (2, 2): [(g, (1, 1)), (-i * x0, (1, 2)), (i * x0, (2, 1)), (D2, (2, 2)), (i * x1, (2, 4)),
                 (D2c, (2, 3)), (r1**2 * k, (4, 4))],
        (2, 3): [(-i * x0, (1, 3)), (i * x0, (2, 1)), (D2, (2, 3)), (D2c, (3, 3)), (i * x1, (4, 3))],
        (2, 4): [(g, (1, 3)), (-i * x0, (1, 4)), (i * x1, (2, 3)), (D2c, (3, 3)), (-i * x1, (4, 3))],
        (3, 3): [(g, (1, 1)), (-i * x0, (1, 3)), (D3, (3, 3)), (i * x1, (4, 3)), (D2c, (2, 3)),
                 (r1**2 * k, (4, 4))],
        (3, 4): [(g, (1, 2)), (i * x1, (1, 4)), (D3, (3, 4)), (-i * x1, (4, 3))],
        (4, 4): [(g, (2, 2)), (-i * x1, (2, 4)), (g, (3, 3)), (-2 * r1**2 * k, (4, 4))],
    }


def build_reduced_generator(p: SystemParams, n: int) -> np.ndarray:
    """16x16 generator ``A`` with ``d vec(rho)/dt = A vec(rho)``."""
    a = np.zeros((16, 16), dtype=complex)
    for (i, j), terms in published_terms(p, n).items():
        for coeff, (k, l) in terms:
            a[vindex(i, j), vindex(k, l)] += coeff
            if i != j:
                a[vindex(j, i), vindex(l, k)] += np.conj(coeff)
    return a


@dataclass(frozen=True)
class ReducedState:
    """The ten independent components ``rho_ij`` (``i <= j``) plus the sector ``n``.

    ``hermiticity_drift`` records ``max |rho_ji - conj(rho_ij)|`` of the
    16-component solution this state was read from (0 for constructed states).
    """

    components: tuple
    n: int
    hermiticity_drift: float = 0.0

    def __post_init__(self):
        if len(self.components) != 10:
            raise ValueError("ReducedState needs the 10 components rho_ij with i <= j")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        object.__setattr__(self, "components", tuple(complex(z) for z in self.components))

    @classmethod
    def from_matrix(cls, m, n: int, hermiticity_drift: float = 0.0) -> "ReducedState":
        m = np.asarray(m)
        return cls(tuple(m[i - 1, j - 1] for i, j in UPPER), n, hermiticity_drift)

    @classmethod
    def basis(cls, level: int, n: int) -> "ReducedState":
        m = np.zeros((4, 4), dtype=complex)
        m[level - 1, level - 1] = 1.0
        return cls.from_matrix(m, n)

    def __getitem__(self, ij) -> complex:
        i, j = ij
        if i <= j:
            return self.components[UPPER.index((i, j))]
        return self.components[UPPER.index((j, i))].conjugate()

    @property
    def matrix(self) -> np.ndarray:
        m = np.empty((4, 4), dtype=complex)
        for i in range(1, 5):
            for j in range(1, 5):
                m[i - 1, j - 1] = self[i, j]
        return m

    def vector(self) -> np.ndarray:
        return self.matrix.reshape(-1)

    @property
    def populations(self) -> np.ndarray:
        return np.array([self[k, k] for k in range(1, 5)])

    @property
    def trace(self) -> complex:
        return complex(sum(self.populations))


def default_sector(alpha) -> int:
    return round(abs(alpha) ** 2) + 1


def _rk_solution(a, y0, t_grid):
    sol = solve_ivp(
        lambda t, y: a @ y, (0.0, float(t_grid[-1])), y0, method="DOP853",
        t_eval=t_grid, rtol=1e-12, atol=1e-14,
    )
    if not sol.success:
        raise ReducedModelError(f"RK solution of the reduced system failed: {sol.message}")
    return sol.y.T


def rk_gap(ys, ys_rk) -> float:
    """Sup-norm gap scaled by ``max(1, sup |y|)``.

    The printed generator has eigenvalues with positive real part, so
    solutions can grow by many orders of magnitude; an absolute gap is only
    meaningful while they stay of order one.
    """
    scale = max(1.0, float(np.max(np.abs(ys))))
    return float(np.max(np.abs(np.asarray(ys) - np.asarray(ys_rk)))) / scale


def solve_reduced(rho0: ReducedState, p: SystemParams, n: int | None = None, t_grid=(0.0,), *, check_rk: bool = True):
    """``rho(t) = exp(t A) rho(0)`` on ``t_grid`` (raw time).

    With ``check_rk`` the same system is also integrated with DOP853 and the
    two solutions must agree to 1e-8 in the sup norm (see :func:`rk_gap`).
    """
    n = rho0.n if n is None else n
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    a = build_reduced_generator(p, n)
    y0 = rho0.vector()
    ys = np.array([expm(a * t) @ y0 for t in t_grid])
    if check_rk and len(t_grid) > 1 and t_grid[-1] > 0:
        grid = t_grid if t_grid[0] == 0 else np.concatenate(([0.0], t_grid))
        ys_rk = _rk_solution(a, y0, grid)[-len(t_grid):]
        gap = rk_gap(ys, ys_rk)
        if gap > RK_AGREEMENT_TOL:
            raise ReducedModelError(f"expm and RK solutions of the reduced system differ by {gap:.2e} (scaled)")
    out = []
    for y in ys:
        m = y.reshape(4, 4)
        d = m - m.conj().T
        np.fill_diagonal(d, 0)
        drift = float(np.max(np.abs(d)))
        out.append(ReducedState.from_matrix(m, n, drift))
    return out


# Two-qubit index (qubit basis e=0, g=1) and cavity offset from n of each
# reduced level, for the two candidate level orderings.
ORDERINGS = {
    "ee_first": [(0, -2), (1, -1), (2, -1), (3, 0)],
    "gg_first": [(3, 0), (2, -1), (1, -1), (0, -2)],
}


def embed_reduced_state(state: ReducedState, ordering: str, space: CompositeSpace) -> np.ndarray:
    """Place the materialized 4x4 reduced matrix on ``|q1 q2, n + offset>`` levels."""
    levels = level_indices(state.n, ordering, space)
    m = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    m[np.ix_(levels, levels)] = state.matrix
    return m


def level_indices(n: int, ordering: str, space: CompositeSpace) -> list[int]:
    idx = []
    for qq, off in ORDERINGS[ordering]:
        photons = max(n + off, 0)
        if photons >= space.n_cavity:
            raise ValueError(f"cavity truncation {space.n_cavity} too small for sector n={n}")
        idx.append(photons * 4 + qq)
    if len(set(idx)) != 4:
        raise ValueError(f"sector n={n} maps two reduced levels onto the same full-model state")
    return idx


def _two_qubit_view(m4: np.ndarray, ordering: str) -> np.ndarray:
    qq = [q for q, _ in ORDERINGS[ordering]]
    out = np.zeros((4, 4), dtype=complex)
    out[np.ix_(qq, qq)] = m4
    return out


@dataclass
class OrderingReport:
    ordering: str
    reduced_populations: np.ndarray
    full_populations: np.ndarray
    population_diff: np.ndarray
    reduced_concurrence: np.ndarray
    full_concurrence: np.ndarray
    concurrence_diff: np.ndarray


@dataclass
class ComparisonReport:
    """Per-time discrepancies between the reduced and the full model."""

    times: np.ndarray
    n: int
    reduced_trace_drift: np.ndarray
    analytic_trace_rate: np.ndarray
    hermiticity_drift: np.ndarray
    orderings: dict = field(default_factory=dict)

    def sup(self, ordering: str, what: str = "population_diff") -> float:
        vals = getattr(self.orderings[ordering], what)
        return float(np.nanmax(vals)) if np.any(np.isfinite(vals)) else float("nan")

    def rows(self):
        header = ["t", "reduced_trace_drift", "hermiticity_drift"]
        for name in self.orderings:
            header += [f"{name}_population_diff", f"{name}_concurrence_reduced",
                       f"{name}_concurrence_full", f"{name}_concurrence_diff"]
        yield header
        for k, t in enumerate(self.times):
            row = [t, self.reduced_trace_drift[k], self.hermiticity_drift[k]]
            for rep in self.orderings.values():
                row += [rep.population_diff[k], rep.reduced_concurrence[k],
                        rep.full_concurrence[k], rep.concurrence_diff[k]]
            yield row


def _safe_concurrence(m) -> float:
    try:
        return concurrence(m)
    except ObservableError:
        return float("nan")


def compare_reduced_vs_full(
    p: SystemParams, n: int | None = None, t_grid=None, rho0: ReducedState | None = None
) -> ComparisonReport:
    """Run both models from matched initial conditions and tabulate their differences.

    The reduced initial state defaults to level 4 fully populated.  Each
    candidate ordering maps reduced level ``k`` to a two-qubit basis state
    with ``n - 2``, ``n - 1``, ``n - 1``, ``n`` photons (reversed for
    ``gg_first``); the full model starts from that embedded state.
    Concurrence of a reduced state is NaN whenever the state is not a valid
    density matrix.
    """
    from .dynamics import propagate

    n = default_sector(p.alpha) if n is None else n
    t_grid = np.linspace(0.0, 15.0, 600) / p.lam if t_grid is None else np.asarray(t_grid, dtype=float)
    rho0 = rho0 or ReducedState.basis(4, n)
    if rho0.n != n:
        rho0 = ReducedState(rho0.components, n)
    reduced = solve_reduced(rho0, p, n, t_grid)
    red_mats = np.array([s.matrix for s in reduced])
    red_pops = np.real(np.array([s.populations for s in reduced]))
    trace_drift = np.array([abs(s.trace - rho0.trace) for s in reduced])
    herm = np.array([s.hermiticity_drift for s in reduced])
    a = build_reduced_generator(p, n)
    diag_rows = [vindex(k, k) for k in range(1, 5)]
    analytic_rate = a[diag_rows].sum(axis=0)

    n_cav = max(p.n_cavity, n + 2)
    pf = p.replace(n_cavity=n_cav)
    space = pf.space
    report = ComparisonReport(t_grid, n, trace_drift, analytic_rate, herm)
    for name in ORDERINGS:
        levels = level_indices(n, name, space)
        full0 = DensityMatrix(embed_reduced_state(rho0, name, space), space)

        def observe(t, state, levels=levels):
            m = state.matrix
            return np.real(np.diag(m)[levels]), _safe_concurrence(partial_trace_cavity(m, space))

        traj = propagate(full0, pf, t_grid, observer=observe, diagnostics=False)
        full_pops = np.array([r[0] for r in traj.records])
        full_c = np.array([r[1] for r in traj.records])
        red_c = np.array([_safe_concurrence(_two_qubit_view(m, name)) for m in red_mats])
        report.orderings[name] = OrderingReport(
            name,
            red_pops,
            full_pops,
            np.max(np.abs(red_pops - full_pops), axis=1),
            red_c,
            full_c,
            np.abs(red_c - full_c),
        )
    return report
