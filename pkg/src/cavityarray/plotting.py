"""Matplotlib renderings of sweep, molecule and analysis tables.

Figures are written with the Agg backend and without the PNG ``Software``
tag so reruns give identical files on the same installation.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from cavityarray.disorder import SweepTable  # noqa: E402
from cavityarray.molecule import uncoupled_ratio  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
}


def _figure(ncols=1, width=3.4):
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    return plt.subplots(1, ncols, figsize=(width * ncols, width * golden + 0.4), squeeze=False)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_sweep(sweep: SweepTable, path, title: str = "") -> Path:
    """Mean eigen-frequencies and mean adjacent separations against sigma_f."""
    with plt.rc_context(STYLE):
        fig, axes = _figure(2)
        ax_e, ax_s = axes[0]
        sig = sweep.sigma
        for k, series in enumerate(sweep.mean_eigs.T, start=1):
            ax_e.plot(sig, series, label=f"mode {k}" if sweep.rows[0].n_modes <= 9 else None)
        ax_e.set_xlabel(r"$\sigma_f$ (THz)")
        ax_e.set_ylabel("mean eigen-frequency (THz)")
        seps = sweep.mean_seps
        if seps.size:
            for k, series in enumerate(seps.T, start=1):
                ax_s.plot(sig, series, label=f"gap {k}")
        ax_s.set_xlabel(r"$\sigma_f$ (THz)")
        ax_s.set_ylabel("mean separation (THz)")
        if seps.shape[-1] <= 8 and seps.size:
            ax_s.legend(frameon=False, ncol=2)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_molecule(rows: list[dict], path) -> Path:
    """Mean splitting and sigma/mu ratio against sigma_f, one curve per coupling."""
    with plt.rc_context(STYLE):
        fig, axes = _figure(2)
        ax_m, ax_r = axes[0]
        for j in sorted({r["j"] for r in rows}):
            sub = [r for r in rows if r["j"] == j]
            sig = np.array([r["sigma_f"] for r in sub])
            ax_m.plot(sig, [r["mu"] for r in sub], label=f"J = {j:g} THz")
            mask = np.array([r["mu"] > 0 for r in sub])
            ax_r.plot(sig[mask], np.array([r["ratio"] for r in sub])[mask], label=f"J = {j:g} THz")
        ax_r.axhline(uncoupled_ratio(), color="0.5", ls="--", lw=0.8)
        ax_m.set_xlabel(r"$\sigma_f$ (THz)")
        ax_m.set_ylabel(r"mean splitting $\mu$ (THz)")
        ax_r.set_xlabel(r"$\sigma_f$ (THz)")
        ax_r.set_ylabel(r"$\sigma/\mu$")
        ax_m.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_ratios(stats, path, threshold: float, title: str = "") -> Path:
    with plt.rc_context(STYLE):
        fig, axes = _figure(1, width=4.0)
        ax = axes[0][0]
        gaps = [s.index + 1 for s in stats]
        ax.bar(gaps, [s.ratio for s in stats], color="tab:blue", width=0.6)
        ax.axhline(threshold, color="tab:green", ls=":", lw=1.0, label="coupling threshold")
        ax.axhline(uncoupled_ratio(), color="tab:red", ls="--", lw=1.0, label="uncoupled")
        ax.set_xlabel("gap index")
        ax.set_ylabel(r"$\sigma/\mu$")
        ax.set_xticks(gaps)
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
