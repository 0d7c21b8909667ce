"""Optional SVG rendering of run outputs (matplotlib, Agg backend)."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed salt and no date so repeated runs produce identical SVGs
matplotlib.rcParams["svg.hashsalt"] = "qbattery"
_META = {"Date": None}

_PANELS = (("energy_norm", "E / omega_q"), ("fluctuation_norm", "Sigma / omega_q"), ("concurrence", "C"))


def _read(path: Path) -> dict[str, list[float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: [float(r[k]) for r in body] for k, name in enumerate(header)}


def render_outputs(out_dir, summaries) -> list[str]:
    out_dir = Path(out_dir)
    written = []
    series = [(s["label"], out_dir / f) for s in summaries for f in s["files"]]
    timeseries = [(lbl, p) for lbl, p in series if p.stem == lbl]
    if timeseries:
        fig, axes = plt.subplots(len(_PANELS), 1, figsize=(6, 7), sharex=True)
        for lbl, path in timeseries:
            data = _read(path)
            for ax, (col, ylabel) in zip(axes, _PANELS):
                ax.plot(data["lambda_t"], data[col], label=lbl, lw=1)
                ax.set_ylabel(ylabel)
        axes[-1].set_xlabel("lambda t")
        axes[0].legend(fontsize=6)
        fig.tight_layout()
        target = out_dir / "timeseries.svg"
        fig.savefig(target, metadata=_META)
        plt.close(fig)
        written.append(target.name)
    for kind in ("energy", "fluctuation"):
        curves = [(lbl, p) for lbl, p in series if p.stem.endswith(f"_parametric_{kind}")]
        if not curves:
            continue
        fig, ax = plt.subplots(figsize=(5, 4))
        for lbl, path in curves:
            data = _read(path)
            ax.plot(data["x_value"], data["concurrence"], label=lbl, lw=1)
        ax.set_xlabel("E / omega_q" if kind == "energy" else "Sigma / omega_q")
        ax.set_ylabel("C")
        ax.legend(fontsize=6)
        fig.tight_layout()
        target = out_dir / f"parametric_{kind}.svg"
        fig.savefig(target, metadata=_META)
        plt.close(fig)
        written.append(target.name)
    return written
