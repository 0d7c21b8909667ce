"""Open-system time evolution of states and observables.

Two propagation paths are provided:

``adaptive_rk``
    Embedded Runge-Kutta (DOP853 by default) on the matrix-valued equation.
    Integration runs in the interaction frame of the diagonal bare
    Hamiltonian ``omega_c a^H a + omega_q/2 (sz1 + sz2)`` so the step size is
    set by the couplings, not by the bare frequencies; states are rotated
    back to the laboratory frame before they are reported.
``expm_superop``
    Column-stacked Liouvillian ``L`` and ``exp(L t)``; dense, so limited to
    ``total_dim <= 40``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import DOP853, RK45

from . import kernels
from .kernels import PhasedOperator
from .model import SystemParams, build_collapse_ops, build_hamiltonian_parts
from .operators import CompositeSpace, eigvals_hermitian, expm, hermitian_defect, symmetrize
from .states import DensityMatrix, Trajectory

RTOL = 1e-8
ATOL = 1e-10
MAX_SUPEROP_DIM = 40

RK_METHODS = {"DOP853": DOP853, "RK45": RK45}


class PropagationError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t = {t:.6g})")
        self.t = t


def _commutator_dissipator_terms(c_ops):
    return [(np.asarray(o, dtype=complex), float(r)) for o, r in c_ops if r != 0]


def lindblad_rhs(rho, h, c_ops) -> np.ndarray:
    """``-i[H, rho] + sum_k r_k (O rho O^H - {O^H O, rho}/2)``."""
    rho = np.asarray(rho, dtype=complex)
    out = -1j * (h @ rho - rho @ h)
    for o, r in _commutator_dissipator_terms(c_ops):
        od = o.conj().T
        odo = od @ o
        out += r * (o @ rho @ od - 0.5 * (odo @ rho + rho @ odo))
    return out


def adjoint_rhs(x, h, c_ops) -> np.ndarray:
    """Heisenberg-picture generator ``i[H, X] + sum_k r_k (O^H X O - {O^H O, X}/2)``."""
    x = np.asarray(x, dtype=complex)
    out = 1j * (h @ x - x @ h)
    for o, r in _commutator_dissipator_terms(c_ops):
        od = o.conj().T
        odo = od @ o
        out += r * (od @ x @ o - 0.5 * (odo @ x + x @ odo))
    return out


def vec(m) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


def liouvillian_from_ops(h, c_ops) -> np.ndarray:
    n = h.shape[0]
    eye = np.eye(n, dtype=complex)
    # vec(A X B) = (B^T kron A) vec(X)
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for o, r in _commutator_dissipator_terms(c_ops):
        odo = o.conj().T @ o
        lv += r * (np.kron(o.conj(), o) - 0.5 * np.kron(eye, odo) - 0.5 * np.kron(odo.T, eye))
    return lv


def build_liouvillian(p: SystemParams, space: CompositeSpace | None = None) -> np.ndarray:
    """Dense ``dim^2 x dim^2`` Liouvillian with ``vec(d rho/dt) = L vec(rho)``."""
    space = space or p.space
    if space.total_dim > MAX_SUPEROP_DIM:
        raise ValueError(
            f"superoperator path limited to total_dim <= {MAX_SUPEROP_DIM}, got {space.total_dim}"
        )
    h0, h1 = build_hamiltonian_parts(p, space)
    return liouvillian_from_ops(h0 + h1, build_collapse_ops(p, space))


@dataclass(frozen=True)
class FrameGenerator:
    """``dY/dt = A Y + Y A^H + sum_J J Y J^H`` in a diagonal rotating frame.

    ``energies`` are the diagonal frame energies ``k``; a frame matrix ``Yf``
    maps to the laboratory frame as ``Y_jk = Yf_jk exp(-i (k_j - k_k) t)``.
    """

    energies: np.ndarray
    a_op: PhasedOperator
    jumps: tuple

    @classmethod
    def for_params(cls, p: SystemParams, picture: str = "schrodinger", space=None) -> "FrameGenerator":
        space = space or p.space
        h0, h1 = build_hamiltonian_parts(p, space)
        c_ops = _commutator_dissipator_terms(build_collapse_ops(p, space))
        e = np.real(np.diag(h0)).copy()
        damping = sum((r * (o.conj().T @ o) for o, r in c_ops), np.zeros_like(h1))
        if picture == "schrodinger":
            k = e
            a1 = -1j * h1 - 0.5 * damping
            jumps = [np.sqrt(r) * o for o, r in c_ops]
        elif picture == "heisenberg":
            k = -e
            a1 = 1j * h1 - 0.5 * damping
            jumps = [np.sqrt(r) * o.conj().T for o, r in c_ops]
        else:
            raise ValueError(f"unknown picture {picture!r}")
        return cls(
            k,
            PhasedOperator.from_dense(a1, k),
            tuple(PhasedOperator.from_dense(j, k) for j in jumps),
        )

    @property
    def dim(self) -> int:
        return len(self.energies)

    def rhs(self, t: float, y: np.ndarray, backend=None) -> np.ndarray:
        """Frame-picture derivative of the ``dim x dim`` matrix ``y``."""
        kernel = kernels.get_backend(backend) if not callable(backend) else backend
        return kernel(self.a_op.at(t), [j.at(t) for j in self.jumps], y)

    def phase(self, t: float) -> np.ndarray:
        w = np.exp(-1j * self.energies * t)
        return np.outer(w, w.conj())

    def to_lab(self, t: float, y: np.ndarray) -> np.ndarray:
        return y * self.phase(t)


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    if t[0] != 0.0:
        raise ValueError(f"t_grid must start at 0, got {t[0]}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    return t


@dataclass
class _RunResult:
    outputs: list
    n_steps: int
    n_rhs: int
    steps_to_point: np.ndarray


def integrate_frame(
    gen: FrameGenerator,
    y0: np.ndarray,
    t_grid,
    emit: Callable[[float, np.ndarray], object],
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    rk_method: str = "DOP853",
    backend=None,
) -> _RunResult:
    """Integrate from ``y0`` (laboratory frame at t=0) and call ``emit(t, Y_lab)`` at each grid time."""
    t_grid = _check_grid(t_grid)
    n = gen.dim
    kernel = kernels.get_backend(backend)
    counter = [0]

    def fun(t, y):
        counter[0] += 1
        return gen.rhs(t, y.reshape(n, n), backend=kernel).reshape(-1)

    y0 = np.ascontiguousarray(y0, dtype=complex)
    outputs = [emit(0.0, y0.copy())]
    steps_to_point = np.zeros(len(t_grid), dtype=int)
    if len(t_grid) == 1:
        return _RunResult(outputs, 0, 0, steps_to_point)
    solver_cls = RK_METHODS[rk_method]
    # scipy measures the local error in an RMS norm; shrinking both tolerances
    # by sqrt(size) makes the accepted error bound hold entry by entry.
    shrink = np.sqrt(y0.size)
    solver = solver_cls(fun, 0.0, y0.reshape(-1), t_grid[-1], rtol=rtol / shrink, atol=atol / shrink)
    n_steps = 0
    i = 1
    while i < len(t_grid):
        t_prev = solver.t
        message = solver.step()
        if solver.status == "failed":
            raise PropagationError(f"adaptive integration failed: {message}", t_prev)
        n_steps += 1
        if solver.t == t_prev:
            raise PropagationError("step size underflow", t_prev)
        interp = None
        while i < len(t_grid) and t_grid[i] <= solver.t:
            ti = t_grid[i]
            if ti == solver.t:
                yi = solver.y
            else:
                interp = interp or solver.dense_output()
                yi = interp(ti)
            outputs.append(emit(ti, gen.to_lab(ti, yi.reshape(n, n))))
            steps_to_point[i] = n_steps
            i += 1
    return _RunResult(outputs, n_steps, counter[0], steps_to_point)


def integrate_superop(lv: np.ndarray, y0: np.ndarray, t_grid, emit) -> _RunResult:
    """Exact propagation ``vec(Y(t)) = exp(L t) vec(Y0)``, interval by interval."""
    t_grid = _check_grid(t_grid)
    n = y0.shape[0]
    v = vec(np.asarray(y0, dtype=complex))
    outputs = [emit(0.0, unvec(v, n).copy())]
    cache: dict[float, np.ndarray] = {}
    for t_prev, ti in zip(t_grid[:-1], t_grid[1:]):
        dt = float(ti - t_prev)
        key = round(dt, 12)
        if key not in cache:
            cache[key] = expm(lv * dt)
        v = cache[key] @ v
        outputs.append(emit(ti, unvec(v, n).copy()))
    return _RunResult(outputs, len(t_grid) - 1, 0, np.arange(len(t_grid)))


def _state_diagnostics(rho: np.ndarray):
    return (
        abs(complex(np.trace(rho)) - 1.0),
        hermitian_defect(rho),
        float(eigvals_hermitian(symmetrize(rho))[0]),
    )


def propagate(
    rho0: DensityMatrix,
    p: SystemParams,
    t_grid,
    method: str = "adaptive_rk",
    *,
    observer: Callable[[float, DensityMatrix], object] | None = None,
    diagnostics: bool = True,
    rtol: float = RTOL,
    atol: float = ATOL,
    rk_method: str = "DOP853",
    backend: str | None = None,
) -> Trajectory:
    """Evolve ``rho0`` under the Lindblad equation and sample it on ``t_grid``.

    ``t_grid`` is in raw time units (the scaled axis is ``p.lam * t``).  By
    default each record is the :class:`DensityMatrix` at that time; pass
    ``observer(t, state)`` to keep only derived quantities instead.
    """
    space = rho0.space
    if space.n_cavity != p.n_cavity:
        raise ValueError("rho0 space does not match p.n_cavity")
    diag = []

    def emit(t, y):
        state = DensityMatrix(y, space)
        if diagnostics:
            diag.append(_state_diagnostics(state.matrix))
        return observer(t, state) if observer is not None else state

    if method == "adaptive_rk":
        gen = FrameGenerator.for_params(p, "schrodinger", space)
        res = integrate_frame(
            gen, rho0.matrix, t_grid, emit, rtol=rtol, atol=atol, rk_method=rk_method, backend=backend
        )
    elif method == "expm_superop":
        res = integrate_superop(build_liouvillian(p, space), rho0.matrix, t_grid, emit)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'adaptive_rk' or 'expm_superop'")

    d = np.array(diag).reshape(-1, 3)
    return Trajectory(
        times=np.asarray(t_grid, dtype=float),
        records=res.outputs,
        lam=p.lam,
        n_steps=res.n_steps,
        n_rhs=res.n_rhs,
        trace_error=d[:, 0],
        hermitian_defect=d[:, 1],
        min_eigenvalue=d[:, 2],
        steps_to_point=res.steps_to_point,
    )


def propagate_heisenberg(
    x0,
    p: SystemParams,
    t_grid,
    method: str = "adaptive_rk",
    *,
    observer: Callable[[float, np.ndarray], object] | None = None,
    rtol: float = RTOL,
    atol: float = ATOL,
    rk_method: str = "DOP853",
    backend: str | None = None,
) -> list:
    """Evolve an observable with the adjoint (Heisenberg) Lindblad generator.

    Returns ``X(t)`` for each grid time, or ``observer(t, X(t))`` if given.
    For ``kappa = gamma = 0`` this is ``exp(iHt) X0 exp(-iHt)``.
    """
    x0 = np.asarray(x0, dtype=complex)
    space = p.space
    if x0.shape != (space.total_dim, space.total_dim):
        raise ValueError(f"x0 has shape {x0.shape}, expected {(space.total_dim,) * 2}")

    def emit(t, y):
        return observer(t, y) if observer is not None else y

    if method == "adaptive_rk":
        gen = FrameGenerator.for_params(p, "heisenberg", space)
        res = integrate_frame(gen, x0, t_grid, emit, rtol=rtol, atol=atol, rk_method=rk_method, backend=backend)
    elif method == "expm_superop":
        # the adjoint map is the Hilbert-Schmidt adjoint of L
        res = integrate_superop(build_liouvillian(p, space).conj().T, x0, t_grid, emit)
    else:
        raise ValueError(f"unknown method {method!r}")
    return res.outputs
