"""Acceptance suite: one check per primary criterion, each printing PASS/FAIL.

The lines are echoed as they happen and collected again in the terminal
summary, so ``pytest tests/test_acceptance.py`` shows them with or without
``-s``.
"""

import json
import math
import time

import numpy as np
import pytest

from hornopt import cli, model, spectral
from hornopt.config import load_config
from hornopt.grid import Grid, quadrature
from hornopt.integrate import integrate_state
from hornopt.optimize import (
    DecisionVector,
    OptimizerConfig,
    Problem,
    bound_fraction,
    objective_gradient,
    optimize,
    penalized_objective,
)

from conftest import point_objects
from oracles import costate_by_differences, cylinder_solution, random_point

RESULTS = []

L = 0.772
PAPER = model.PhysicalParams(rho0=1.0, c=340.0, f0=440.0, L=L)
ARTIFACTS = ("duct.csv", "modes.csv", "report.json")


@pytest.fixture
def criterion(capsys):
    def record(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        RESULTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return record


def test_adjoint_gradient_check(criterion):
    t0 = time.perf_counter()
    problem = Problem.build(PAPER, (1, 2), d0=0.02, m=201)
    rng = np.random.default_rng(11)
    x = problem.grid.nodes / L
    a = rng.uniform(-1, 1, 3)
    u = 0.02 + 0.03 * (a[0] * np.sin(2 * np.pi * x) + a[1] * np.cos(3 * np.pi * x) + a[2] * x)
    decision = DecisionVector(u, rng.uniform(0.2, 1.0, 2), rng.uniform(0.5, 1.5, 2))
    _, grad = objective_gradient(decision, problem)
    ga = grad.to_array()
    base = decision.to_array()
    fd = np.empty_like(base)
    step = 1e-6
    for i in range(base.size):
        xp, xm = base.copy(), base.copy()
        xp[i] += step
        xm[i] -= step
        jp = penalized_objective(DecisionVector.from_array(xp, 201, 2), problem)[0].penalized
        jm = penalized_objective(DecisionVector.from_array(xm, 201, 2), problem)[0].penalized
        fd[i] = (jp - jm) / (2 * step)
    elapsed = time.perf_counter() - t0
    err = np.abs(fd - ga)
    ok = bool(np.all(err <= 1e-4 * np.abs(fd) + 1e-7)) and elapsed < 10
    worst = float(np.max(err / (1e-4 * np.abs(fd) + 1e-7)))
    criterion("adjoint gradient vs central differences (N=2, m=201)", ok,
              f"{base.size} components, worst error/allowance {worst:.3g}, {elapsed:.2f} s")


def test_cylinder_spectrum(criterion):
    grid = Grid(1025, L)
    t0 = time.perf_counter()
    pairs = spectral.eigen_solve(spectral.BoreProfile(grid, np.full(grid.m, 0.02)), 5)
    elapsed = time.perf_counter() - t0
    errs = [abs(p.k - (2 * n - 1) * math.pi / (2 * L)) / ((2 * n - 1) * math.pi / (2 * L))
            for n, p in enumerate(pairs, start=1)]
    ok = max(errs) < 1e-3 and elapsed < 5
    criterion("cylinder spectrum n=1..5 (m=1025)", ok,
              f"max relative error {max(errs):.2e}, {elapsed:.2f} s")


def test_cone_spectrum(criterion):
    grid = Grid(1025, L)
    t0 = time.perf_counter()
    pairs = spectral.eigen_solve(spectral.cone_profile(grid, 1e-3 * L), 5)
    elapsed = time.perf_counter() - t0
    errs = [abs(p.k - n * math.pi / L) / (n * math.pi / L) for n, p in enumerate(pairs, start=1)]
    ok = max(errs) < 1e-2 and elapsed < 5
    criterion("offset cone spectrum n=1..5 vs n pi/L", ok,
              f"max relative error {max(errs):.2e}, {elapsed:.2f} s")


def test_hamiltonian_affinity(criterion):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10_000):
        p = random_point(rng, int(rng.integers(1, 7)))
        params, harmonics = point_objects(p)
        args = (p["c"], p["costate"], harmonics, params)
        hu = model.hamiltonian(p["state"], p["u"], *args)
        h0 = model.hamiltonian(p["state"], 0.0, *args)
        sw = model.switching_value(p["state"], p["costate"])
        worst = max(worst, abs(hu - h0 - p["u"] * sw) / np.spacing(abs(hu)))
    criterion("Hamiltonian affine in u (10^4 samples)", worst <= 4,
              f"worst gap {worst:.0f} ulps")


def test_costate_consistency(criterion):
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(1000):
        p = random_point(rng, int(rng.integers(1, 4)))
        params, harmonics = point_objects(p)
        got = model.costate_rhs(p["costate"], p["state"], p["u"], p["c"], harmonics, params)
        fd = costate_by_differences(p)
        worst = max(worst, float(np.max(np.abs(got - fd) / np.abs(fd))))
    criterion("costate RHS vs -dH/dX by differences (10^3 samples)", worst < 1e-6,
              f"worst relative error {worst:.2e}")


def test_integrator_order(criterion):
    k = 3 * math.pi / (2 * L)
    errs = []
    for m in (129, 257, 513, 1025):
        grid = Grid(m, L)
        traj = integrate_state(np.zeros(m), [1.0, 1.0, 0.0], grid, model.HarmonicSpec((1,), k))
        phi, _ = cylinder_solution(k, grid.nodes)
        errs.append(float(np.max(np.abs(traj.phi[:, 0] - phi))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    criterion("integrator second order (m=129..1025)", ok,
              "ratios " + ", ".join(f"{r:.3f}" for r in ratios))


@pytest.fixture(scope="module")
def paper_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("paper")
    runs = []
    for name in ("a", "b"):
        t0 = time.perf_counter()
        code = cli.main(["run", "--config", "paper_n2", "--out", str(tmp / name)])
        runs.append((code, tmp / name, time.perf_counter() - t0))
    return runs


def test_paper_scenario_n2(criterion, paper_runs):
    code, out, elapsed = paper_runs[0]
    report = json.loads((out / "report.json").read_text())
    cfg = load_config("paper_n2")
    problem = cfg.problem()
    d = np.loadtxt(out / "duct.csv", delimiter=",", skiprows=1)
    u, diameter = d[:, 2], d[:, 1]
    frac = bound_fraction(u, problem.grid, problem.bounds)
    feasible = bool(np.all((u >= -0.2) & (u <= 0.2)) and np.all(diameter >= cfg.bounds.a)
                    and abs(np.linalg.norm(report["decision"]["c"]) - 1) < 1e-12)
    validity = report["validity"]
    ok = (code == 0 and report["converged"] and frac >= 0.05 and feasible
          and math.isfinite(validity) and elapsed < 300 and d.shape[0] == 513)
    criterion("paper scenario N=2 (m=513, 3 restarts)", ok,
              f"converged={report['converged']} ({report['stop_reason']}), "
              f"J={report['objective']['penalized']:.6g}, bound fraction {frac:.3f}, "
              f"feasible={feasible}, validity={validity:.4g}, {elapsed:.1f} s")


def test_paper_scenarios_n5_n10(criterion):
    t0 = time.perf_counter()
    cfg5 = load_config("paper_n5")
    p5 = cfg5.problem()
    res5 = optimize(p5, cfg5.opt.optimizer_config())
    feasible5 = bool(np.all(res5.trajectory.diameter >= cfg5.bounds.a))

    cfg10 = load_config("paper_n10")
    p10 = cfg10.problem()
    visits = []
    feasible10 = True
    for seed in range(5):
        res = optimize(p10, OptimizerConfig(cfg10.opt.max_iters, cfg10.opt.tol, 1, seed))
        feasible10 &= bool(np.all(res.trajectory.diameter >= cfg10.bounds.a))
        u = res.decision.u
        visits.append(bool(np.any(u <= cfg10.bounds.d_lo) and np.any(u >= cfg10.bounds.d_hi)))
    ok = feasible5 and feasible10 and any(visits)
    criterion("paper scenarios N=5 and N=10", ok,
              f"N=5 feasible={feasible5} J={res5.report.penalized:.4g}; N=10 feasible={feasible10}, "
              f"both bounds visited in {sum(visits)}/5 restarts; {time.perf_counter() - t0:.1f} s")


def test_orthogonality(criterion):
    grid = Grid(1025, L)
    x = grid.nodes
    profiles = {
        "cylinder": np.full(grid.m, 0.02),
        "cone": x + 1e-3 * L,
        "smooth": 0.03 + 0.02 * np.sin(2 * x) + 0.01 * np.cos(7 * x) + 0.04 * x,
    }
    worst = {}
    for name, d in profiles.items():
        profile = spectral.BoreProfile(grid, d)
        worst[name] = spectral.orthogonality_check(spectral.eigen_solve(profile, 6), profile)
    ok = max(worst.values()) < 1e-6
    criterion("D^2-weighted orthogonality (m=1025)", ok,
              ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_determinism(criterion, paper_runs):
    (_, a, _), (_, b, _) = paper_runs
    same = {name: (a / name).read_bytes() == (b / name).read_bytes() for name in ARTIFACTS}
    criterion("byte-identical report.json and CSVs on rerun", all(same.values()),
              ", ".join(f"{k} {'same' if v else 'differs'}" for k, v in same.items()))


def test_energy_consistency(criterion):
    params = PAPER
    problem = Problem.build(params, (1,), d0=0.02, m=513)
    x = problem.grid.nodes / L
    u = 0.05 * np.sin(2 * np.pi * x)
    decision = DecisionVector(u, [1.0], [1.0])
    report, traj = penalized_objective(decision, problem)

    k = problem.harmonics.wave_numbers[0]
    omega = k * params.c
    d2 = traj.diameter ** 2
    worst = 0.0
    for t in (0.0, 0.37e-3, 1.1e-3):
        # phi(x, t) = c1 phi1(x) exp(i omega t)
        phase = np.exp(1j * omega * t)
        phi_x = traj.dphi[:, 0] * phase
        phi_t = 1j * omega * traj.phi[:, 0] * phase
        field = math.pi * params.rho0 / 8 * d2 * (np.abs(phi_x) ** 2 + np.abs(phi_t / params.c) ** 2)
        direct = quadrature(field, problem.grid)
        worst = max(worst, abs(direct - report.energy) / report.energy)
    criterion("modal energy equals field energy (N=1, c1=1)", worst < 1e-10,
              f"worst relative gap {worst:.1e}")
