"""CSV, JSON and SVG output for a finished design."""

import json
import logging
import math
from pathlib import Path

import numpy as np

from . import spectral
from .config import ProblemConfig, config_values
from .grid import quadrature
from .optimize import DesignResult, Problem, arc_intervals, bound_fraction

log = logging.getLogger(__name__)

RESIDUAL_GATE = 1e-3
SPECTRAL_RTOL = 0.01
MAX_PLOTTED_MODES = 5


def _fmt(value) -> str:
    return repr(float(value))


def write_csv(path, header, columns) -> None:
    rows = [",".join(header)]
    for row in zip(*columns):
        rows.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def read_csv(path):
    """Header and float columns of a CSV written by :func:`write_csv`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, {name: data[:, i] for i, name in enumerate(header)}


def normalized_modes(result: DesignResult):
    """Modes scaled to 1 at the closed end; zero columns for dead modes."""
    traj = result.trajectory
    phi, dphi = traj.phi.copy(), traj.dphi.copy()
    scale = np.asarray(result.decision.phi0, dtype=float)
    c = np.asarray(result.decision.c, dtype=float)
    dead = (scale == 0) | (c == 0)
    for n in np.flatnonzero(dead):
        log.warning("mode %d has zero weight or amplitude; emitting zero columns", n + 1)
    safe = np.where(dead, 1.0, scale)
    phi = np.where(dead, 0.0, phi / safe)
    dphi = np.where(dead, 0.0, dphi / safe)
    return phi, dphi, dead


def spectral_verification(result: DesignResult, problem: Problem) -> dict:
    """Re-solve the spectrum of the designed bore and compare with the targets.

    Only modes whose relative open-end residual ``|phi_n(L)/phi_n(0)|`` is
    below ``RESIDUAL_GATE`` are expected to be resonances of the bore.
    """
    profile = spectral.BoreProfile(problem.grid, result.trajectory.diameter)
    n_modes = 2 * max(problem.harmonics.multipliers) + 2
    pairs = spectral.eigen_solve(profile, n_modes)
    matches = spectral.match_targets(pairs, problem.harmonics.wave_numbers)
    phi0 = np.asarray(result.decision.phi0)
    residuals = np.asarray(result.report.terminal_residuals)
    for n, entry in enumerate(matches):
        rel = abs(residuals[n]) / abs(phi0[n]) if phi0[n] != 0 else math.inf
        entry["relative_residual"] = float(rel)
        entry["gated"] = bool(rel < RESIDUAL_GATE)
        entry["pass"] = (not entry["gated"]) or entry["rel_error"] < SPECTRAL_RTOL
    return {
        "wave_numbers": [p.k for p in pairs],
        "interior_zeros": [p.interior_zeros for p in pairs],
        "orthogonality": spectral.orthogonality_check(pairs, profile),
        "targets": matches,
    }


def emit_artifacts(result: DesignResult, problem: Problem, config: ProblemConfig, out_dir,
                   verification=None) -> list:
    """Write duct/modes CSVs, report.json and the three SVG plots into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    x = problem.grid.nodes
    d = result.trajectory.diameter
    u = result.decision.u
    n = problem.n
    phi, dphi, dead = normalized_modes(result)

    files = []
    write_csv(out / "duct.csv", ["x", "D", "Dprime"], [x, d, u])
    files.append(out / "duct.csv")
    header = ["x"] + [f"phi_{i + 1}" for i in range(n)] + [f"dphi_{i + 1}" for i in range(n)]
    write_csv(out / "modes.csv", header, [x] + list(phi.T) + list(dphi.T))
    files.append(out / "modes.csv")

    if verification is None:
        verification = spectral_verification(result, problem)
    profile = spectral.BoreProfile(problem.grid, d)
    mode_norms = [spectral.weighted_norm(result.trajectory.phi[:, i], profile) for i in range(n)]

    report = {
        "objective": result.report.to_dict(),
        "decision": {
            "c": [float(v) for v in result.decision.c],
            "phi0": [float(v) for v in result.decision.phi0],
        },
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "restart": result.restart,
        "restart_values": result.restart_values,
        "seed": result.seed,
        "validity": result.validity,
        "penalty_w": problem.penalty_w,
        "grid_m": problem.grid.m,
        "bound_fraction": bound_fraction(u, problem.grid, problem.bounds),
        "arcs": [list(r) for r in arc_intervals(result.arcs, x)],
        "mode_normalization": {
            "csv": "phi_n(0) = 1",
            "value_at_closed_end": [float(v) for v in result.decision.phi0],
            "d2_weighted_norm": mode_norms,
            "dead_modes": [int(i) + 1 for i in np.flatnonzero(dead)],
        },
        "spectral": verification,
        "config": config_values(config),
    }
    with open(out / "report.json", "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append(out / "report.json")

    files.extend(_plots(out, x, d, u, phi, problem))
    return files


def csv_energy(duct_csv, modes_csv, report_json) -> float:
    """Recompute the energy from emitted files alone (trapezoid rule)."""
    from .grid import Grid

    _, duct = read_csv(duct_csv)
    header, modes = read_csv(modes_csv)
    with open(report_json) as fh:
        report = json.load(fh)
    cfg = report["config"]["model"]
    k0 = 2.0 * math.pi * cfg["f0"] / cfg["c"]
    x = duct["x"]
    grid = Grid(x.size, float(x[-1]))
    c = report["decision"]["c"]
    phi0 = report["decision"]["phi0"]
    dens = np.zeros_like(x)
    for i, j in enumerate(cfg["multipliers"]):
        k = j * k0
        phi = phi0[i] * modes[f"phi_{i + 1}"]
        dphi = phi0[i] * modes[f"dphi_{i + 1}"]
        dens += c[i] ** 2 * (dphi ** 2 + k * k * phi ** 2)
    return math.pi * cfg["rho0"] / 8.0 * quadrature(duct["D"] ** 2 * dens, grid)


def _plots(out, x, d, u, phi, problem):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "hornopt"
    meta = {"Date": None}
    b = problem.bounds
    files = []

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(x, d, color="k")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("D (m)")
    ax.set_title("Duct shape")
    fig.tight_layout()
    fig.savefig(out / "duct.svg", metadata=meta)
    plt.close(fig)
    files.append(out / "duct.svg")

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(x, u, color="k")
    ax.axhline(b.d_lo, ls="--", color="tab:blue", label=f"D1 = {b.d_lo:g}")
    ax.axhline(b.d_hi, ls="--", color="tab:red", label=f"D2 = {b.d_hi:g}")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("D'")
    ax.set_title("Derivative of the duct diameter")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(out / "dprime.svg", metadata=meta)
    plt.close(fig)
    files.append(out / "dprime.svg")

    fig, ax = plt.subplots(figsize=(7, 3))
    for i in range(min(phi.shape[1], MAX_PLOTTED_MODES)):
        ax.plot(x, phi[:, i], label=f"phi_{i + 1}")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("phi_n")
    ax.set_title("Modal shapes")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(out / "modes.svg", metadata=meta)
    plt.close(fig)
    files.append(out / "modes.svg")
    return files
