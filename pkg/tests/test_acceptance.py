"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every criterion records a PASS/FAIL line that is printed in the terminal
summary (see ``conftest.py``).  Run alone with::

    pytest tests/test_acceptance.py -v
"""

import time

import numpy as np
import pytest

from qbattery.config import PRESETS, parse_config
from qbattery.dynamics import propagate
from qbattery.model import (
    SystemParams,
    build_hamiltonian,
    build_hqb,
    build_initial_state,
    excitation_number,
    number_operator,
    qubit_excitation,
)
from qbattery.observables import concurrence, energy_fluctuation
from qbattery.operators import EXCITED, GROUND, QUBIT1, expm
from qbattery.reduced import (
    ORDERINGS,
    ReducedState,
    build_reduced_generator,
    compare_reduced_vs_full,
    default_sector,
    rk_gap,
    solve_reduced,
    _rk_solution,
)
from qbattery.runner import expand_points, run
from qbattery.simulation import simulate
from qbattery.states import DensityMatrix

from conftest import random_density, random_unitary
from test_reduced import manifest_generator

pytestmark = pytest.mark.slow

RESULTS: dict[str, tuple[bool, str]] = {}
TINY = 1e-300  # lambda = 0 stand-in (SystemParams requires lambda > 0)
FIRST_PEAK = (0.0, 1.3)


def record(name, ok, detail):
    RESULTS[name] = (bool(ok), detail)
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def battery():
    """Every variant of every preset on the default grid, deduplicated by parameters."""
    t0 = time.perf_counter()
    cache, runs = {}, {}
    for name in PRESETS:
        cfg = parse_config(mode="sweep", preset=name)
        for pt in expand_points(cfg):
            if pt.params not in cache:
                cache[pt.params] = simulate(pt.params, cfg.t_max, cfg.n_points)
            runs[pt.label] = cache[pt.params]
    return runs, time.perf_counter() - t0


def first_peak(res):
    lt, e = res.lambda_t, res.column("energy_norm")
    return float(e[(lt >= FIRST_PEAK[0]) & (lt <= FIRST_PEAK[1])].max())


def test_criterion_01_state_validity(battery):
    runs, elapsed = battery
    worst = dict(trace=0.0, herm=0.0, eig=np.inf, e_lo=np.inf, e_hi=-np.inf, c_lo=np.inf, c_hi=-np.inf, s_lo=np.inf)
    for res in runs.values():
        tr = res.trajectory
        worst["trace"] = max(worst["trace"], tr.trace_error.max())
        worst["herm"] = max(worst["herm"], tr.hermitian_defect.max())
        worst["eig"] = min(worst["eig"], tr.min_eigenvalue.min())
        e, c, s = res.column("energy_norm"), res.column("concurrence"), res.column("fluctuation_norm")
        worst["e_lo"], worst["e_hi"] = min(worst["e_lo"], e.min()), max(worst["e_hi"], e.max())
        worst["c_lo"], worst["c_hi"] = min(worst["c_lo"], c.min()), max(worst["c_hi"], c.max())
        worst["s_lo"] = min(worst["s_lo"], s.min())
    ok = (
        worst["trace"] < 1e-8 and worst["herm"] < 1e-8 and worst["eig"] >= -1e-7
        and 0 <= worst["e_lo"] and worst["e_hi"] <= 1
        and 0 <= worst["c_lo"] and worst["c_hi"] <= 1 and worst["s_lo"] >= 0
        and elapsed < 300
    )
    detail = (
        f"{len(runs)} preset runs in {elapsed:.0f}s; max|Tr-1|={worst['trace']:.1e} "
        f"max herm={worst['herm']:.1e} min eig={worst['eig']:.1e} "
        f"E in [{worst['e_lo']:.2e}, {worst['e_hi']:.3f}] C in [{worst['c_lo']:.1e}, {worst['c_hi']:.3f}] "
        f"min Sigma={worst['s_lo']:.1e}"
    )
    record("1 state validity", ok, detail)


def _conservation(p):
    rho0 = build_initial_state(p)
    h, n_op = build_hamiltonian(p), excitation_number(p.space)
    t = np.linspace(0, 15, 600) / p.lam
    traj = propagate(rho0, p, t, observer=lambda t, s: (s.expect(h), s.expect(n_op)), diagnostics=False)
    e, n = np.array(traj.records).T
    return np.abs(e - e[0]).max() / (1 + abs(e[0])), np.abs(n - n[0]).max()


def test_criterion_02_closed_system_conservation():
    lines, ok = [], True
    for alpha in (0.5, 2.0, 3.0):
        for zeta in (0.0, 1.0):
            de, dn = _conservation(SystemParams(alpha=alpha, zeta=zeta))
            ok &= de < 1e-6
            if zeta == 0.0:
                ok &= dn < 1e-6
            lines.append(f"a={alpha:g} z={zeta:g}: dH={de:.1e} dN={dn:.1e}")
    for delta, g in ((4.0, 1.0), (0.0, 0.3), (0.0, 2.0)):
        de, dn = _conservation(SystemParams(alpha=2.0).replace(delta=delta, g=g))
        ok &= de < 1e-6 and dn < 1e-6
    _, dn_aniso = _conservation(SystemParams(alpha=2.0, zeta=1.0, g=1.0))
    ok &= dn_aniso > 1e-3
    record("2 closed-system conservation", ok, "; ".join(lines) + f"; zeta=1 N deviation {dn_aniso:.3f} (> 1e-3)")


def test_criterion_03_analytic_oracles():
    t = np.linspace(0, 15, 301)
    p = SystemParams(lam=TINY, g=0.0, kappa=0.6, alpha=2.0)
    rho0 = build_initial_state(p)
    n_op = number_operator(p.space)
    n_t = propagate(rho0, p, t, observer=lambda t, s: s.expect(n_op)).records
    err1 = np.abs(np.array(n_t) - rho0.expect(n_op) * np.exp(-0.6 * t)).max()

    def pure(p, n, q1, q2):
        v = np.kron(np.eye(p.n_cavity)[n], np.kron(q1, q2)).astype(complex)
        return DensityMatrix(np.outer(v, v.conj()), p.space)

    p = SystemParams(g=0.0, alpha=0.0, n_cavity=3)
    pe_op = qubit_excitation(QUBIT1, p.space)
    pe = propagate(pure(p, 1, GROUND, GROUND), p, t / p.lam, observer=lambda t, s: s.expect(pe_op)).records
    err2 = np.abs(np.array(pe) - np.sin(t) ** 2).max()

    p = SystemParams(lam=TINY, g=0.0, gamma=0.4, alpha=0.0, n_cavity=2)
    pe_op = qubit_excitation(QUBIT1, p.space)
    ee = propagate(pure(p, 0, EXCITED, GROUND), p, t, observer=lambda t, s: s.expect(pe_op)).records
    err3 = np.abs(np.array(ee) - np.exp(-0.4 * t)).max()
    record(
        "3 analytic oracles", max(err1, err2, err3) < 1e-6,
        f"damped cavity {err1:.1e}, Jaynes-Cummings {err2:.1e}, qubit decay {err3:.1e} (tol 1e-6)",
    )


def test_criterion_04_propagator_cross_validation():
    gaps = []
    for zeta in (0.0, 1.0):
        p = SystemParams(alpha=1.0, n_cavity=4, zeta=zeta)
        rho0 = build_initial_state(p, tail_tol=1.0)
        t = np.linspace(0, 10, 401) / p.lam
        rk = propagate(rho0, p, t, "adaptive_rk", diagnostics=False)
        ex = propagate(rho0, p, t, "expm_superop", diagnostics=False)
        gaps.append(max(np.abs(a.matrix - b.matrix).max() for a, b in zip(rk.records, ex.records)))
    record("4 RK vs expm", max(gaps) < 1e-6, f"sup-norm gap zeta=0: {gaps[0]:.1e}, zeta=1: {gaps[1]:.1e} (tol 1e-6)")


def test_criterion_05_fluctuation_oracle():
    gaps, zero = [], True
    for zeta in (0.0, 1.0):
        p = SystemParams(alpha=1.0, n_cavity=4, zeta=zeta)
        rho0 = build_initial_state(p, tail_tol=1.0)
        hqb, h = build_hqb(p), build_hamiltonian(p)
        t = np.linspace(0, 15, 301)
        sigma = energy_fluctuation(p, rho0, hqb, t)
        direct = []
        for ti in t:
            u = expm(-1j * h * ti)
            d = u.conj().T @ hqb @ u - hqb
            m1 = np.trace(rho0.matrix @ d).real
            direct.append(np.sqrt(max(np.trace(rho0.matrix @ d @ d).real - m1**2, 0.0)))
        gaps.append(np.abs(sigma - direct).max())
        zero &= sigma[0] == 0.0
    record("5 fluctuation oracle", max(gaps) < 1e-7 and zero, f"gap {max(gaps):.1e} (tol 1e-7); Sigma(0)=0 exactly: {zero}")


def test_criterion_06_concurrence():
    rng = np.random.default_rng(7)
    phi = (np.kron(EXCITED, EXCITED) + np.kron(GROUND, GROUND)) / np.sqrt(2)
    bell = abs(concurrence(np.outer(phi, phi)) - 1)
    products = [np.kron(a, b) for a in (EXCITED, GROUND, (EXCITED + 1j * GROUND) / np.sqrt(2)) for b in (EXCITED, GROUND)]
    prod = max(concurrence(np.outer(v, v.conj())) for v in products)
    werner = max(
        abs(concurrence(q * np.outer(phi, phi) + (1 - q) * np.eye(4) / 4) - max(0, (3 * q - 1) / 2))
        for q in (0.2, 1 / 3, 0.8, 1.0)
    )
    lu = 0.0
    for _ in range(100):
        rho = random_density(4, rng, rank=int(rng.integers(1, 5)))
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        lu = max(lu, abs(concurrence(u @ rho @ u.conj().T) - concurrence(rho)))
    ok = bell < 1e-10 and prod == 0.0 and werner < 1e-8 and lu < 1e-8
    record("6 concurrence", ok, f"Bell {bell:.1e}, products max {prod:.1e}, Werner {werner:.1e}, local unitaries {lu:.1e}")


def test_criterion_07a_anisotropy_raises_first_peak(battery):
    runs, _ = battery
    e0, e1 = first_peak(runs["fig_a_alpha=2_zeta=0"]), first_peak(runs["fig_a_alpha=2_zeta=1"])
    record("7a zeta=1 first peak > zeta=0", e1 > e0, f"max E/wq over lambda t in [0, 1.3]: zeta=1 {e1:.4f}, zeta=0 {e0:.4f}")


def test_criterion_07b_first_peak_grows_with_alpha(battery):
    runs, _ = battery
    ok, parts = True, []
    for z in (0, 1):
        peaks = [first_peak(runs[f"fig_a_alpha={a}_zeta={z}"]) for a in ("0.5", "2", "3")]
        ok &= peaks[0] < peaks[1] < peaks[2]
        parts.append(f"zeta={z}: " + " / ".join(f"{v:.4f}" for v in peaks))
    record("7b first peak grows with alpha", ok, "alpha 0.5/2/3 -> " + "; ".join(parts))


def test_criterion_07c_detuning_dampens(battery):
    runs, _ = battery
    m0 = runs["fig_b_Delta=0_zeta=0"].column("energy_norm").mean()
    m4 = runs["fig_b_Delta=4_zeta=0"].column("energy_norm").mean()
    record("7c detuning lowers mean energy", m4 < m0, f"mean E/wq over [0, 15]: Delta=4 {m4:.4f}, Delta=0 {m0:.4f}")


def test_criterion_07d_dissipation_attenuates(battery):
    runs, _ = battery
    ok, parts = True, []
    for z in (0, 1):
        late = {}
        for k in ("0", "0.6"):
            res = runs[f"fig_d_kappa={k}_zeta={z}"]
            late[k] = res.column("energy_norm")[res.lambda_t >= 10].mean()
        ok &= late["0.6"] < late["0"]
        parts.append(f"zeta={z}: {late['0.6']:.4f} < {late['0']:.4f}")
    record("7d dissipation attenuates late energy", ok, "late mean E/wq, (kappa, gamma)=(0.6, 0.4) vs (0, 0): " + "; ".join(parts))


def test_criterion_07e_decoupled_control():
    worst = 0.0
    for zeta in (0.0, 1.0):
        for kappa, gamma in ((0.0, 0.0), (0.6, 0.4)):
            res = simulate(SystemParams(alpha=2.0, g=0.0, zeta=zeta, kappa=kappa, gamma=gamma), fluctuation=False)
            worst = max(worst, np.abs(res.column("energy_norm")).max(), np.abs(res.column("concurrence")).max())
    record("7e g=0 control", worst < 1e-9, f"max |E|, |C| = {worst:.1e} (tol 1e-9)")


def test_criterion_08_truncation_convergence():
    gaps = []
    for zeta in (0.0, 1.0):
        p = SystemParams(alpha=3.0, zeta=zeta)
        e = [simulate(q, fluctuation=False, diagnostics=False).column("energy_norm")
             for q in (p, p.replace(n_cavity=p.n_cavity + 8))]
        gaps.append(np.abs(e[0] - e[1]).max())
    record("8 truncation convergence", max(gaps) < 1e-4, f"alpha=3, N_c 37 -> 45: sup |dE/wq| = {max(gaps):.1e} (tol 1e-4)")


def test_criterion_09_reduced_model_fidelity():
    mismatches = 0
    for p in (SystemParams(), SystemParams(alpha=1.0, zeta=0.5, kappa=0.6, gamma=0.4, omega_c=2.0, g=1.3, lam=0.7)):
        for n in (1, 2, 3, 5, 10):
            mismatches += int(np.count_nonzero(build_reduced_generator(p, n) != manifest_generator(p, n)))
    p = SystemParams()
    n = default_sector(p.alpha)
    t = np.linspace(0, 15, 600) / p.lam
    gaps = []
    for level in (1, 2, 3, 4):
        y0 = ReducedState.basis(level, n).vector()
        a = build_reduced_generator(p, n)
        ys = np.array([expm(a * ti) @ y0 for ti in t])
        gaps.append(rk_gap(ys, _rk_solution(a, y0, t)))
        solve_reduced(ReducedState.basis(level, n), p, n, t)
    report = compare_reduced_vs_full(p)
    finite = all(np.isfinite(report.sup(k)) for k in ORDERINGS)
    ok = mismatches == 0 and max(gaps) < 1e-8 and finite and len(report.times) == 600
    record(
        "9 reduced-model fidelity", ok,
        f"manifest mismatches {mismatches}; expm vs RK gap (scaled by max(1, sup|y|)) {max(gaps):.1e}; "
        f"report sup population diff " + ", ".join(f"{k} {report.sup(k):.3f}" for k in ORDERINGS),
    )


def test_criterion_10_determinism(tmp_path):
    digests = []
    for k in range(2):
        cfg = parse_config(mode="sweep", preset="fig_c", output_dir=str(tmp_path / f"run{k}"), workers=2 if k else 1,
                           flag_overrides=["t_max=5", "n_points=200"])
        run(cfg)
        digests.append({p.name: p.read_bytes() for p in sorted((tmp_path / f"run{k}").glob("*.csv"))})
    ok = digests[0] == digests[1] and len(digests[0]) == 6
    record("10 determinism", ok, f"{len(digests[0])} CSVs byte-identical across a serial and a 2-worker run: {ok}")
