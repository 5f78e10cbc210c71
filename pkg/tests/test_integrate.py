import math

import numpy as np
import pytest

from hornopt import model
from hornopt.errors import GridMismatchError, InfeasibleTrajectoryError
from hornopt.integrate import Grid, integrate_costate, integrate_state, quadrature

from oracles import cylinder_solution

L = 0.772


def _cylinder_run(m, k=None):
    k = k if k is not None else math.pi / (2 * L)
    grid = Grid(m, L)
    h = model.HarmonicSpec((1,), k)
    traj = integrate_state(np.zeros(m), [1.0, 1.0, 0.0], grid, h)
    phi, dphi = cylinder_solution(k, grid.nodes)
    err = max(np.max(np.abs(traj.phi[:, 0] - phi)), np.max(np.abs(traj.dphi[:, 0] - dphi)) / k)
    return traj, err


# -- Grid and quadrature ----------------------------------------------------

def test_grid_nodes():
    g = Grid(5, 2.0)
    assert list(g.nodes) == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert g.h == 0.5
    assert list(g.weights()) == [0.25, 0.5, 0.5, 0.5, 0.25]
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0


@pytest.mark.parametrize("m,length", [(2, 1.0), (10, 0.0), (10, -1.0)])
def test_grid_rejects(m, length):
    with pytest.raises(ValueError):
        Grid(m, length)


def test_quadrature_examples():
    g = Grid(7, L)
    assert quadrature(np.ones(7), g) == pytest.approx(L, rel=1e-15)
    g1 = Grid(11, 1.0)
    assert quadrature(g1.nodes, g1) == pytest.approx(0.5, abs=1e-15)
    gp = Grid(1001, math.pi)
    assert abs(quadrature(np.sin(gp.nodes), gp) - 2.0) < 2e-6


def test_quadrature_grid_mismatch():
    with pytest.raises(GridMismatchError):
        quadrature(np.ones(6), Grid(7, 1.0))


# -- state sweep --------------------------------------------------------------

def test_cylinder_matches_cosine():
    traj, err = _cylinder_run(513)
    assert err < 1e-4
    assert abs(traj.phi[-1, 0]) < 1e-4
    assert np.all(traj.diameter == 1.0)


def test_integrator_order():
    errs = [_cylinder_run(m, k=3 * math.pi / (2 * L))[1] for m in (129, 257, 513, 1025)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


@pytest.mark.parametrize("slope", [-0.02, 0.0, 0.15])
def test_diameter_exact_for_constant_slope(slope):
    grid = Grid(257, L)
    h = model.HarmonicSpec((1, 2), 5.0)
    traj = integrate_state(np.full(257, slope), model.make_state(0.02, [1, 1], [0, 0]), grid, h)
    np.testing.assert_allclose(traj.diameter, 0.02 + slope * grid.nodes, rtol=0, atol=1e-15)


def test_diameter_is_cumulative_trapezoid():
    grid = Grid(101, L)
    u = 0.1 * np.sin(9 * grid.nodes)
    h = model.HarmonicSpec((1,), 4.0)
    traj = integrate_state(u, [0.05, 1.0, 0.0], grid, h)
    want = 0.05 + np.concatenate([[0.0], np.cumsum(0.5 * grid.h * (u[1:] + u[:-1]))])
    np.testing.assert_allclose(traj.diameter, want, rtol=0, atol=1e-15)


def test_state_sweep_is_deterministic():
    grid = Grid(129, L)
    u = 0.05 * np.cos(3 * grid.nodes)
    h = model.HarmonicSpec((1, 3), 4.0)
    x0 = model.make_state(0.02, [1.0, 0.5], [0.0, 0.0])
    a = integrate_state(u, x0, grid, h)
    b = integrate_state(u, x0, grid, h)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_infeasible_reports_node():
    grid = Grid(101, 1.0)
    h = model.HarmonicSpec((1,), 1.0)
    # D = 0.05 - 0.2 x passes 0.0095 between nodes 20 and 21
    with pytest.raises(InfeasibleTrajectoryError) as info:
        integrate_state(np.full(101, -0.2), [0.05, 1.0, 0.0], grid, h, floor=0.0095)
    assert info.value.node == 21
    with pytest.raises(InfeasibleTrajectoryError) as info:
        integrate_state(np.zeros(101), [0.001, 1.0, 0.0], grid, h, floor=0.01)
    assert info.value.node == 0


def test_state_grid_mismatch():
    grid = Grid(11, 1.0)
    h = model.HarmonicSpec((1,), 1.0)
    with pytest.raises(GridMismatchError):
        integrate_state(np.zeros(10), [1.0, 1.0, 0.0], grid, h)
    with pytest.raises(GridMismatchError):
        integrate_state(np.zeros(11), [1.0, 1.0], grid, h)


# -- costate sweep ------------------------------------------------------------

def _setup(m=257, n=2):
    grid = Grid(m, L)
    params = model.PhysicalParams()
    harmonics = model.HarmonicSpec.from_params(tuple(range(1, n + 1)), params)
    u = 0.1 * np.sin(7 * grid.nodes) + 0.02
    traj = integrate_state(u, model.make_state(0.02, np.ones(n), np.zeros(n)), grid, harmonics)
    return grid, params, harmonics, u, traj


def test_costate_zero_solution():
    grid, params, harmonics, u, traj = _setup()
    out = integrate_costate(traj, u, [0.0, 0.0], np.zeros(5), grid, harmonics, params)
    assert np.all(out.samples == 0.0)


def test_costate_superposition(rng):
    grid, params, harmonics, u, traj = _setup()
    t1, t2 = rng.normal(size=5), rng.normal(size=5)
    a, b = 0.7, -1.3

    def sweep(t):
        return integrate_costate(traj, u, [0.0, 0.0], t, grid, harmonics, params).samples

    combined = sweep(a * t1 + b * t2)
    np.testing.assert_allclose(combined, a * sweep(t1) + b * sweep(t2), rtol=0,
                               atol=1e-10 * np.max(np.abs(combined)))


def test_costate_round_trip(rng):
    # Heun is not time-reversible, so the round-trip gap is O(h^3); 1e-6 needs
    # a fine grid for the k_2 = 2 k_0 oscillation.
    grid = Grid(4097, L)
    params = model.PhysicalParams()
    harmonics = model.HarmonicSpec.from_params((1, 2), params)
    u = 0.05 * np.sin(2 * math.pi * grid.nodes / L)
    traj = integrate_state(u, model.make_state(0.05, [1, 1], [0, 0]), grid, harmonics)
    coeffs = [0.6, 0.8]
    terminal = rng.normal(size=5)
    back = integrate_costate(traj, u, coeffs, terminal, grid, harmonics, params).samples

    # forward Heun on mu' = costate_rhs, written out independently
    s, h = traj.samples, grid.h
    mu = back[0].copy()
    for i in range(grid.m - 1):
        g0 = model.costate_rhs(mu, s[i], u[i], coeffs, harmonics, params)
        mt = mu + h * g0
        g1 = model.costate_rhs(mt, s[i + 1], u[i + 1], coeffs, harmonics, params)
        mu = mu + 0.5 * h * (g0 + g1)
    assert np.max(np.abs(mu - terminal)) <= 1e-6 * np.max(np.abs(terminal))


def test_costate_forcing_included():
    grid, params, harmonics, u, traj = _setup()
    out = integrate_costate(traj, u, [1.0, 0.0], np.zeros(5), grid, harmonics, params)
    assert np.max(np.abs(out.samples[0])) > 0


def test_costate_grid_mismatch():
    grid, params, harmonics, u, traj = _setup()
    with pytest.raises(GridMismatchError):
        integrate_costate(traj, u, [0, 0], np.zeros(5), Grid(grid.m + 1, L), harmonics, params)
    with pytest.raises(GridMismatchError):
        integrate_costate(traj, u, [0, 0], np.zeros(4), grid, harmonics, params)
