"""Execute a :class:`RunConfig`: simulations, sweeps, parametric curves, reduced-model runs."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import ConfigError, RunConfig, get_preset
from .dynamics import ATOL, RTOL, PropagationError
from .model import DETUNING_CONVENTION, SystemParams, TruncationError
from .observables import ObservableError, ObservableRecord, parametric_pairs
from .reduced import UPPER, compare_reduced_vs_full, default_sector, solve_reduced, ReducedState
from .simulation import scaled_grid, simulate

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
TRACE_LIMIT = 1e-8


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Point:
    label: str
    params: SystemParams


def _fmt(v) -> str:
    return f"{v:g}"


def expand_points(cfg: RunConfig) -> list[Point]:
    preset = get_preset(cfg.preset)
    if cfg.mode in ("simulate", "reduced"):
        return [Point(f"{preset.name}_zeta={_fmt(cfg.params.zeta)}", cfg.params)]
    axis = cfg.sweep_axis or preset.axis
    if cfg.sweep_values is not None:
        variants = [{axis: v} for v in cfg.sweep_values]
    elif axis == preset.axis:
        variants = [dict(v) for v in preset.variants]
    else:
        raise ConfigError(f"sweep_axis {axis!r} needs sweep_values (preset {preset.name} varies {preset.axis})")
    if axis == "zeta":
        zetas = [None]
    else:
        zetas = list(cfg.zeta_values or preset.zeta_values)
    points = []
    for variant in variants:
        for z in zetas:
            overrides = dict(variant)
            if z is not None:
                overrides["zeta"] = z
                label = f"{preset.name}_{axis}={_fmt(variant[axis])}_zeta={_fmt(z)}"
            else:
                label = f"{preset.name}_zeta={_fmt(variant[axis])}"
            points.append(Point(label, cfg.point_params(**overrides)))
    return points


def check_records(records: list[ObservableRecord], label: str):
    for r in records:
        problems = []
        if not -BOUND_SLACK <= r.energy_norm <= 1 + BOUND_SLACK:
            problems.append(f"energy_norm={r.energy_norm:.3e}")
        if not 0.0 <= r.concurrence <= 1.0:
            problems.append(f"concurrence={r.concurrence:.3e}")
        if not r.fluctuation_norm >= 0.0:
            problems.append(f"fluctuation_norm={r.fluctuation_norm:.3e}")
        if not r.trace_error < TRACE_LIMIT:
            problems.append(f"trace_error={r.trace_error:.3e}")
        if problems:
            raise NumericalFailure(f"{label}: invalid record at lambda_t={r.lambda_t:.6g}: {', '.join(problems)}")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _run_point(args):
    cfg, point, out_dir = args
    try:
        res = simulate(point.params, cfg.t_max, cfg.n_points, method=cfg.method)
    except (PropagationError, ObservableError) as exc:
        raise NumericalFailure(f"{point.label}: {exc}") from exc
    except TruncationError as exc:
        raise TruncationError(f"{point.label}: {exc}") from exc
    check_records(res.records, point.label)
    files = []
    if cfg.mode in ("simulate", "sweep"):
        path = out_dir / f"{point.label}.csv"
        write_csv(path, ObservableRecord.columns(), (r.as_row() for r in res.records))
        files.append(path.name)
    if cfg.mode == "parametric":
        xs = ("energy", "fluctuation") if cfg.parametric_x == "both" else (cfg.parametric_x,)
        for x in xs:
            path = out_dir / f"{point.label}_parametric_{x}.csv"
            write_csv(path, ["x_value", "concurrence"], parametric_pairs(res.records, cfg.window, x))
            files.append(path.name)
    traj = res.trajectory
    summary = {
        "label": point.label,
        "files": files,
        "params": point.params.as_dict(),
        "n_cavity": point.params.n_cavity,
        "total_dim": point.params.space.total_dim,
        "n_steps": int(traj.n_steps),
        "n_rhs_evaluations": int(traj.n_rhs),
        "max_trace_error": float(np.max(traj.trace_error)),
        "max_hermitian_defect": float(np.max(traj.hermitian_defect)),
        "min_eigenvalue": float(np.min(traj.min_eigenvalue)),
    }
    return summary


def _run_reduced(cfg: RunConfig, out_dir: Path) -> dict:
    p = cfg.params
    n = cfg.reduced_n or default_sector(p.alpha)
    lam_t = scaled_grid(cfg.t_max, cfg.n_points)
    t = lam_t / p.lam
    states = solve_reduced(ReducedState.basis(4, n), p, n, t)
    header = ["lambda_t"]
    for i, j in UPPER:
        header += [f"re_rho{i}{j}", f"im_rho{i}{j}"]
    header += ["re_trace", "im_trace", "hermiticity_drift"]
    rows = []
    for lt, s in zip(lam_t, states):
        row = [float(lt)]
        for ij in UPPER:
            z = s[ij]
            row += [z.real, z.imag]
        tr = s.trace
        rows.append(row + [tr.real, tr.imag, s.hermiticity_drift])
    files = [f"reduced_n={n}.csv", f"reduced_compare_n={n}.csv"]
    write_csv(out_dir / files[0], header, rows)
    try:
        report = compare_reduced_vs_full(p, n, t)
    except (PropagationError, ObservableError) as exc:
        raise NumericalFailure(f"reduced_n={n}: {exc}") from exc
    rows = list(report.rows())
    rows[0][0] = "lambda_t"
    write_csv(out_dir / files[1], rows[0], ([lt] + r[1:] for lt, r in zip(lam_t, rows[1:])))
    return {
        "label": f"reduced_n={n}",
        "files": files,
        "n": n,
        "params": p.as_dict(),
        "max_trace_drift": float(np.max(report.reduced_trace_drift)),
        "sup_population_diff": {k: report.sup(k) for k in report.orderings},
        "sup_concurrence_diff": {k: report.sup(k, "concurrence_diff") for k in report.orderings},
    }


def metadata(cfg: RunConfig, summaries: list[dict]) -> dict:
    return {
        "version": __version__,
        "config": cfg.as_dict(),
        "detuning_convention": DETUNING_CONVENTION,
        "units": "energies and times in units of omega_q; time axis reported as lambda*t",
        "integrator": {
            "method": cfg.method,
            "rk_pair": "DOP853",
            "rtol": RTOL,
            "atol": ATOL,
            "error_norm": "max-norm (RMS tolerances scaled by 1/sqrt(size))",
            "frame": "interaction frame of omega_c a^H a + omega_q/2 (sz1 + sz2)",
        },
        "kernel_backend": kernels.DEFAULT_BACKEND,
        "points": summaries,
    }


def run(cfg: RunConfig) -> dict:
    """Run ``cfg`` and write all outputs; returns the metadata written alongside."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "reduced":
        summaries = [_run_reduced(cfg, out_dir)]
    else:
        jobs = [(cfg, pt, out_dir) for pt in expand_points(cfg)]
        log.info("running %d point(s) with %d worker(s)", len(jobs), cfg.workers)
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
                summaries = list(pool.map(_run_point, jobs))
        else:
            summaries = [_run_point(j) for j in jobs]
    meta = metadata(cfg, summaries)
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if cfg.emit_plots:
        from .plots import render_outputs

        render_outputs(out_dir, summaries)
    return meta
