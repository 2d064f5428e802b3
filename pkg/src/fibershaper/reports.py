"""CSV and figure emission for workflow results.

Column orders are part of the tool's contract (documented in the README);
floats are written with %.12g so reruns of a deterministic workflow produce
byte-identical files. Figures are rendered headless next to the CSVs.
"""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .constellations import Constellation4D
from .fibersim import SymbolCloud
from .optimizer import OptimizationTrace
from .workflows import CompareReport, SweepResult

AIR_COLUMNS = ("constellation", "n_spans", "distance_km",
               "launch_power_dbm", "snr_4d_db", "air_bit_per_4d",
               "backend", "std_error")
SWEEP_COLUMNS = ("n_spans", "distance_km", "p_opt_dbm", "snr_4d_db",
                 "air_bit_per_4d", "backend")
TRACE_COLUMNS = ("iteration", "objective_bit_per_4d", "grad_norm",
                 "p_opt_dbm", "snr_4d_db", "step_size")
COMPARE_COLUMNS = ("name", "reach_km", "rate_at_reference_bit_per_4d",
                   "rate_gain_bit_per_4d", "reach_gain_pct")
MOMENT_COLUMNS = ("constellation", "m_points", "mu2_x", "mu2_y", "phi_x",
                  "phi_y", "psi_x", "psi_y", "xpol4", "pseudo_x", "pseudo_y",
                  "energy_levels")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _write_rows(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


def write_air_csv(path, rows) -> Path:
    """rows: dicts keyed by AIR_COLUMNS (std_error may be None)."""
    return _write_rows(path, AIR_COLUMNS, rows)


def write_sweep_csv(path, sweep: SweepResult) -> Path:
    rows = [{c: getattr(r, c) for c in SWEEP_COLUMNS} for r in sweep.rows]
    return _write_rows(path, SWEEP_COLUMNS, rows)


def write_trace_csv(path, trace: OptimizationTrace) -> Path:
    rows = [{c: getattr(r, c) for c in TRACE_COLUMNS} for r in trace.rows]
    return _write_rows(path, TRACE_COLUMNS, rows)


def write_compare_csv(path, report: CompareReport) -> Path:
    rows = [{
        "name": e.name,
        "reach_km": e.reach_km,
        "rate_at_reference_bit_per_4d": e.rate_at_reference,
        "rate_gain_bit_per_4d": e.rate_gain,
        "reach_gain_pct": e.reach_gain_pct,
    } for e in report.entries]
    return _write_rows(path, COMPARE_COLUMNS, rows)


def write_moments_csv(path, name, M, mom, levels) -> Path:
    row = {
        "constellation": name, "m_points": M,
        "mu2_x": mom.mu2_x, "mu2_y": mom.mu2_y,
        "phi_x": mom.phi_x, "phi_y": mom.phi_y,
        "psi_x": mom.psi_x, "psi_y": mom.psi_y,
        "xpol4": mom.xpol4,
        "pseudo_x": mom.pseudo_x, "pseudo_y": mom.pseudo_y,
        "energy_levels": "|".join(f"{e:.6g}x{m}" for e, m in levels.levels),
    }
    return _write_rows(path, MOMENT_COLUMNS, [row])


def plot_constellation(C: Constellation4D, path, title=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    energies = C.energies()
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, s, label in ((axes[0], C.sx(), "x polarization"),
                         (axes[1], C.sy(), "y polarization")):
        sc = ax.scatter(s.real, s.imag, c=energies, cmap="viridis", s=18)
        ax.set_title(label)
        ax.set_xlabel("in-phase")
        ax.set_ylabel("quadrature")
        ax.set_aspect("equal")
        ax.grid(alpha=0.3)
    fig.colorbar(sc, ax=axes[1], label="4D symbol energy")
    axes[2].hist(energies, bins=40)
    axes[2].set_title("energy distribution")
    axes[2].set_xlabel("4D symbol energy")
    axes[2].set_ylabel("points")
    fig.suptitle(title or C.name or "")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sweep(sweeps, path, rate_threshold=None, title=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for sw in sweeps:
        ax.plot(sw.distances(), sw.rates(), marker="o", ms=3.5,
                label=sw.constellation)
    if rate_threshold is not None:
        ax.axhline(rate_threshold, color="gray", ls="--", lw=1,
                   label=f"threshold {rate_threshold:g}")
    ax.set_xlabel("distance (km)")
    ax.set_ylabel("rate (bit/4D symbol)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_trace(trace: OptimizationTrace, path, title=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    it = [r.iteration for r in trace.rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(it, trace.objectives(), color="tab:blue", label="objective")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective (bit/4D)", color="tab:blue")
    ax2 = ax.twinx()
    ax2.semilogy(it, [max(r.grad_norm, 1e-300) for r in trace.rows],
                 color="tab:orange", lw=1, label="|grad|")
    ax2.set_ylabel("projected gradient norm", color="tab:orange")
    ax.set_title(title or f"optimization ({trace.status})")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_compare(report: CompareReport, path, title=None) -> Path:
    path = Path(path)
    fig_path = plot_sweep(
        list(report.sweeps.values()), path,
        rate_threshold=report.rate_threshold,
        title=title or f"reach at {report.rate_threshold:g} bit/4D")
    return fig_path


def plot_cloud(cloud: SymbolCloud, C: Constellation4D, path,
               title=None, max_points: int = 20000) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = min(len(cloud), max_points)
    rx = cloud.rx_points[:n]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.5))
    for ax, (i, q), s, label in ((axes[0], (0, 1), C.sx(), "x polarization"),
                                 (axes[1], (2, 3), C.sy(), "y polarization")):
        ax.scatter(rx[:, i], rx[:, q], s=2, alpha=0.25, color="tab:blue")
        ax.scatter(s.real, s.imag, s=26, color="tab:red", marker="x")
        ax.set_title(label)
        ax.set_xlabel("in-phase")
        ax.set_ylabel("quadrature")
        ax.set_aspect("equal")
        ax.grid(alpha=0.3)
    fig.suptitle(title or f"snr_4d = {cloud.snr_4d_db:.2f} dB")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
