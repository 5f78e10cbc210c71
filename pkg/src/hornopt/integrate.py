"""Forward state sweep, backward costate sweep and quadrature on uniform grids.

Both sweeps use the same two-stage stencil: an explicit Euler predictor
followed by a trapezoidal (Crank-Nicolson) corrector,

    X~      = X_i + h f(X_i, u_i)
    X_{i+1} = X_i + h/2 (f(X_i, u_i) + f(X~, u_{i+1}))

with the control stored per node and taken as linear between nodes.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model
from .errors import GridMismatchError, InfeasibleTrajectoryError, SingularGeometryError
from .grid import Grid, quadrature

__all__ = [
    "Grid",
    "Trajectory",
    "CostateTrajectory",
    "quadrature",
    "integrate_state",
    "integrate_costate",
]


@dataclass(frozen=True)
class Trajectory:
    """State samples, one row per grid node.

    ``predictor`` keeps the Euler stage of every step; the discrete adjoint
    in :mod:`hornopt.optimize` differentiates through it.
    """

    grid: Grid
    samples: np.ndarray
    predictor: Optional[np.ndarray] = None

    @property
    def diameter(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def phi(self) -> np.ndarray:
        return self.samples[:, 1::2]

    @property
    def dphi(self) -> np.ndarray:
        return self.samples[:, 2::2]


@dataclass(frozen=True)
class CostateTrajectory:
    grid: Grid
    samples: np.ndarray


def _check_floor(x1, node, floor):
    if not x1 >= floor or not x1 > 0:
        raise InfeasibleTrajectoryError(node, float(x1), floor)


def integrate_state(u_grid, initial, grid: Grid, harmonics, floor: float = 0.0) -> Trajectory:
    """Sweep the state system from ``x = 0`` to ``x = L``.

    Raises :class:`InfeasibleTrajectoryError` with the offending node index as
    soon as the diameter drops below ``floor`` (or to zero).
    """
    u = grid.check(u_grid, "u_grid")
    x = np.array(initial, dtype=float)
    if x.ndim != 1 or x.size != model.state_size(harmonics.n):
        raise GridMismatchError(
            f"initial state has {x.size} components, expected {model.state_size(harmonics.n)}"
        )
    _check_floor(x[0], 0, floor)

    h = grid.h
    samples = np.empty((grid.m, x.size))
    stages = np.empty((grid.m - 1, x.size))
    samples[0] = x
    for i in range(grid.m - 1):
        f0 = model.webster_rhs(x, u[i], harmonics)
        xt = x + h * f0
        try:
            f1 = model.webster_rhs(xt, u[i + 1], harmonics)
        except SingularGeometryError:
            raise InfeasibleTrajectoryError(i + 1, float(xt[0]), floor) from None
        x = x + 0.5 * h * (f0 + f1)
        _check_floor(x[0], i + 1, floor)
        stages[i] = xt
        samples[i + 1] = x
    return Trajectory(grid, samples, stages)


def integrate_costate(
    traj: Trajectory, u_grid, coeffs, terminal, grid: Grid, harmonics, params
) -> CostateTrajectory:
    """Sweep the (linear) costate system backwards from ``terminal`` at ``x = L``.

    The stencil is the forward one run with step ``-h``; state and control are
    read from the stored samples at the nodes being traversed.
    """
    if traj.grid.m != grid.m or traj.samples.shape[0] != grid.m:
        raise GridMismatchError("trajectory and grid disagree on the number of nodes")
    u = grid.check(u_grid, "u_grid")
    states = traj.samples
    try:
        model._diameter(states)
    except SingularGeometryError as exc:
        bad = int(np.argmin(states[:, 0]))
        raise InfeasibleTrajectoryError(bad, exc.x1, 0.0) from None
    mu = np.array(terminal, dtype=float)
    if mu.shape != (states.shape[1],):
        raise GridMismatchError(
            f"terminal costate has shape {mu.shape}, expected ({states.shape[1]},)"
        )
    coeffs = np.asarray(coeffs, dtype=float)

    h = grid.h
    out = np.empty_like(states)
    out[-1] = mu
    for i in range(grid.m - 1, 0, -1):
        g0 = model.costate_rhs(mu, states[i], u[i], coeffs, harmonics, params)
        mt = mu - h * g0
        g1 = model.costate_rhs(mt, states[i - 1], u[i - 1], coeffs, harmonics, params)
        mu = mu - 0.5 * h * (g0 + g1)
        out[i - 1] = mu
    return CostateTrajectory(grid, out)
