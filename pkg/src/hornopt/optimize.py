"""Penalized energy objective, its adjoint gradient and the projected BFGS loop.

The decision vector bundles the nodal slope control ``u = D'``, the modal
weights ``c`` and the free initial modal values ``phi0 = X_2n(0)``.  The
objective is

    J = int_0^L (pi rho0/8) D^2 sum_n c_n^2 (phi_n'^2 + k_n^2 phi_n^2) dx
        - w sum_n phi_n(L)^2

evaluated with the trapezoid rule on the state sweep of :mod:`hornopt.integrate`.
The gradient is the exact adjoint of that discrete map, so it agrees with
finite differences of ``J`` to rounding rather than to O(h^2).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import model
from .errors import AllRestartsInfeasibleError, ConfigError, InfeasibleTrajectoryError
from .grid import Grid, quadrature
from .integrate import CostateTrajectory, Trajectory, integrate_costate, integrate_state

log = logging.getLogger(__name__)

ARMIJO = 1e-4
MAX_BACKTRACKS = 40
SINGULAR_RTOL = 1e-6


@dataclass
class DecisionVector:
    u: np.ndarray
    c: np.ndarray
    phi0: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.phi0 = np.asarray(self.phi0, dtype=float)

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.u, self.c, self.phi0])

    @classmethod
    def from_array(cls, values, m: int, n: int) -> "DecisionVector":
        values = np.asarray(values, dtype=float)
        if values.size != m + 2 * n:
            raise ValueError(f"expected {m + 2 * n} values, got {values.size}")
        return cls(values[:m].copy(), values[m:m + n].copy(), values[m + n:].copy())

    def copy(self) -> "DecisionVector":
        return DecisionVector(self.u.copy(), self.c.copy(), self.phi0.copy())


@dataclass(frozen=True)
class Problem:
    """Everything that defines one instance of the design problem.

    ``phi0_lo``/``phi0_hi`` box the free initial modal values.  The objective
    is homogeneous of degree two in ``phi0``, so without a box it has no
    finite maximizer; the default pins every mode to unit amplitude at the
    closed end.
    """

    params: model.PhysicalParams
    harmonics: model.HarmonicSpec
    bounds: model.ControlBounds
    d0: float
    grid: Grid
    penalty_w: float
    phi0_lo: float = 1.0
    phi0_hi: float = 1.0

    def __post_init__(self):
        if not self.d0 >= self.bounds.a:
            raise ConfigError("d0", f"initial diameter {self.d0} is below the floor {self.bounds.a}")
        if not self.penalty_w >= 0:
            raise ConfigError("penalty_w", f"must be non-negative, got {self.penalty_w}")
        if not self.phi0_lo <= self.phi0_hi:
            raise ConfigError("phi0_lo", "must not exceed phi0_hi")
        if abs(self.grid.length - self.params.L) > 1e-12 * self.params.L:
            raise ConfigError("grid", "grid length differs from duct length L")

    @classmethod
    def build(cls, params, multipliers, bounds=None, d0=0.02, m=513, penalty_w=None, **kw):
        harmonics = model.HarmonicSpec.from_params(multipliers, params)
        bounds = bounds or model.ControlBounds()
        if penalty_w is None:
            penalty_w = default_penalty_weight(params, harmonics, d0)
        return cls(params, harmonics, bounds, float(d0), Grid(m, params.L), float(penalty_w), **kw)

    @property
    def n(self) -> int:
        return self.harmonics.n

    def initial_state(self, decision: DecisionVector) -> np.ndarray:
        # closed end: phi_n'(0) = 0
        return model.make_state(self.d0, decision.phi0, np.zeros(self.n))


def default_penalty_weight(params, harmonics, d0) -> float:
    """``1e3 * (pi rho0/8) * D0^2 * k_max^2 * L``: the energy scale times 1e3."""
    return 1e3 * params.energy_scale * d0 ** 2 * harmonics.k_max ** 2 * params.L


@dataclass
class ObjectiveReport:
    energy: float
    penalty: float
    penalized: float
    terminal_residuals: np.ndarray
    gradient_norm: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "penalty": self.penalty,
            "penalized": self.penalized,
            "terminal_residuals": [float(r) for r in self.terminal_residuals],
            "gradient_norm": self.gradient_norm,
        }


@dataclass
class OptimizerConfig:
    max_iters: int = 500
    tol: float = 1e-5
    restarts: int = 3
    seed: int = 0


@dataclass
class DesignResult:
    decision: DecisionVector
    trajectory: Trajectory
    report: ObjectiveReport
    iterations: int
    converged: bool
    validity: float
    seed: int
    stop_reason: str = ""
    restart: int = 0
    history: List[float] = field(default_factory=list)
    restart_values: List[Optional[float]] = field(default_factory=list)
    costate: Optional[CostateTrajectory] = None
    switching: Optional[np.ndarray] = None
    arcs: Optional[np.ndarray] = None


def _report(problem, decision, traj, gradient_norm=None):
    grid = problem.grid
    dens = model.energy_integrand(traj.samples, decision.c, problem.harmonics, problem.params)
    energy = quadrature(dens, grid)
    residuals = traj.samples[-1, 1::2].copy()
    penalty = problem.penalty_w * float(np.sum(residuals * residuals))
    return ObjectiveReport(energy, penalty, energy - penalty, residuals, gradient_norm)


def penalized_objective(decision: DecisionVector, problem: Problem):
    """Integrate the state for ``decision`` and return ``(report, trajectory)``."""
    traj = integrate_state(
        decision.u, problem.initial_state(decision), problem.grid, problem.harmonics,
        floor=problem.bounds.a,
    )
    return _report(problem, decision, traj), traj


def _adjoint(problem, decision, traj):
    """Reverse sweep through the predictor-corrector map.

    Returns the node sensitivities ``lam[i] = dJ/dX_i`` and ``dJ/du``.  The
    Jacobian-transpose products reuse the model: ``f_X^T v`` is
    ``-costate_rhs(v, ...)`` with zero weights and ``f_u . v`` is the
    switching value.
    """
    grid, harmonics, params = problem.grid, problem.harmonics, problem.params
    h = grid.h
    wq = grid.weights()
    X, Xt, u = traj.samples, traj.predictor, decision.u
    zero_c = np.zeros(problem.n)

    def energy_grad(i):
        # d/dX of w_i * g(X_i): the c-weighted forcing of the costate equation
        return -wq[i] * model.costate_rhs(np.zeros(X.shape[1]), X[i], 0.0,
                                          decision.c, harmonics, params)

    def ftv(v, state, ui):
        return -model.costate_rhs(v, state, ui, zero_c, harmonics, params)

    lam = np.empty_like(X)
    grad_u = np.zeros(grid.m)
    mu = energy_grad(grid.m - 1)
    mu[1::2] -= 2.0 * problem.penalty_w * X[-1, 1::2]
    lam[-1] = mu
    for i in range(grid.m - 2, -1, -1):
        zeta = 0.5 * h * ftv(mu, Xt[i], u[i + 1])
        q = 0.5 * h * mu + h * zeta
        grad_u[i + 1] += 0.5 * h * model.switching_value(Xt[i], mu)
        grad_u[i] += model.switching_value(X[i], q)
        mu = energy_grad(i) + mu + zeta + ftv(q, X[i], u[i])
        lam[i] = mu
    return lam, grad_u


def objective_gradient(decision: DecisionVector, problem: Problem, return_costate=False):
    """Objective report and ``dJ/d(decision)`` by the discrete adjoint.

    With ``return_costate`` the node sensitivities ``dJ/dX_i`` (the discrete
    costate) are returned as a third element.
    """
    report, traj = penalized_objective(decision, problem)
    lam, grad_u = _adjoint(problem, decision, traj)
    X = traj.samples
    phi, dphi = X[:, 1::2], X[:, 2::2]
    per_mode = (2.0 * problem.params.energy_scale) * X[:, :1] ** 2 * (
        dphi * dphi + problem.harmonics.k2 * phi * phi
    )
    grad_c = np.array([decision.c[n] * quadrature(per_mode[:, n], problem.grid)
                       for n in range(problem.n)])
    grad = DecisionVector(grad_u, grad_c, lam[0, 1::2].copy())
    report.gradient_norm = float(np.linalg.norm(grad.to_array()))
    if return_costate:
        return report, grad, lam
    return report, grad


def project(decision: DecisionVector, bounds: model.ControlBounds,
            phi0_box: Optional[tuple] = None) -> DecisionVector:
    """Clip ``u`` to the slope box and rescale ``c`` to unit length.

    A zero ``c`` becomes the uniform unit vector.  ``phi0`` is left alone
    unless ``phi0_box`` is given.
    """
    u = np.clip(decision.u, bounds.d_lo, bounds.d_hi)
    norm = float(np.linalg.norm(decision.c))
    if norm > 0 and math.isfinite(norm):
        c = decision.c / norm
    else:
        c = np.full(decision.c.size, 1.0 / math.sqrt(decision.c.size))
    phi0 = decision.phi0.copy()
    if phi0_box is not None:
        phi0 = np.clip(phi0, *phi0_box)
    return DecisionVector(u, c, phi0)


def classify_arcs(u, switching, bounds: model.ControlBounds) -> np.ndarray:
    """Label each node ``bang_lo``, ``bang_hi``, ``singular`` or ``interior``."""
    u = np.asarray(u, dtype=float)
    sw = np.abs(np.asarray(switching, dtype=float))
    scale = float(sw.max()) if sw.size else 0.0
    labels = np.full(u.size, "interior", dtype=object)
    labels[sw <= SINGULAR_RTOL * scale] = "singular"
    labels[u <= bounds.d_lo] = "bang_lo"
    labels[u >= bounds.d_hi] = "bang_hi"
    return labels


def arc_intervals(labels, nodes) -> list:
    """Collapse per-node labels into ``(kind, x_start, x_end)`` runs."""
    runs = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            runs.append((str(labels[start]), float(nodes[start]), float(nodes[i - 1])))
            start = i
    return runs


def bound_fraction(u, grid: Grid, bounds: model.ControlBounds) -> float:
    """Fraction of ``[0, L]`` covered by intervals whose both end nodes sit on a bound."""
    u = np.asarray(u)
    lo = u <= bounds.d_lo
    hi = u >= bounds.d_hi
    on = (lo[:-1] & lo[1:]) | (hi[:-1] & hi[1:])
    return float(on.sum() * grid.h / grid.length)


class _Search:
    """Projected BFGS for one restart, run on ``f = -J``."""

    def __init__(self, problem: Problem, opt: OptimizerConfig):
        self.problem = problem
        self.opt = opt
        m, n = problem.grid.m, problem.n
        self.m, self.n = m, n
        lo = np.concatenate([np.full(m, problem.bounds.d_lo), np.full(n, -np.inf),
                             np.full(n, problem.phi0_lo)])
        hi = np.concatenate([np.full(m, problem.bounds.d_hi), np.full(n, np.inf),
                             np.full(n, problem.phi0_hi)])
        self.lo, self.hi = lo, hi
        self.fixed = lo == hi
        self.sphere = slice(m, m + n)
        # u entries of dJ/du carry the trapezoid mass; undo it in the metric
        self.diag = np.ones(m + 2 * n)
        self.diag[:m] = 1.0 / problem.grid.weights()

    def project(self, x):
        d = DecisionVector.from_array(x, self.m, self.n)
        return project(d, self.problem.bounds, (self.problem.phi0_lo, self.problem.phi0_hi)).to_array()

    def evaluate(self, x):
        d = DecisionVector.from_array(x, self.m, self.n)
        report, grad = objective_gradient(d, self.problem)
        return report, -grad.to_array()

    def value(self, x):
        d = DecisionVector.from_array(x, self.m, self.n)
        try:
            report, _ = penalized_objective(d, self.problem)
        except InfeasibleTrajectoryError:
            return None
        return -report.penalized

    def projected_gradient(self, x, g):
        pg = x - np.clip(x - g, self.lo, self.hi)
        c = x[self.sphere]
        gc = g[self.sphere]
        pg[self.sphere] = gc - np.dot(gc, c) * c
        pg[self.fixed] = 0.0
        return float(np.linalg.norm(pg))

    def active(self, x, g):
        eps = 1e-12
        at_lo = (x <= self.lo + eps) & (g > 0)
        at_hi = (x >= self.hi - eps) & (g < 0)
        return at_lo | at_hi | self.fixed

    def direction(self, H, x, g):
        act = self.active(x, g)
        free = ~act
        d = np.zeros_like(x)
        d[free] = -H[np.ix_(free, free)] @ g[free]
        d[act] = -self.diag[act] * g[act]
        d[self.fixed] = 0.0
        return d

    def line_search(self, x, f, g, d):
        alpha = 1.0
        for _ in range(MAX_BACKTRACKS):
            trial = self.project(x + alpha * d)
            step = trial - x
            decrease = float(np.dot(g, step))
            if decrease < 0:
                ft = self.value(trial)
                if ft is not None and ft <= f + ARMIJO * decrease:
                    return trial, ft
            alpha *= 0.5
        return None, None

    def run(self, x0):
        x = self.project(x0)
        report, g = self.evaluate(x)
        f = -report.penalized
        history = [report.penalized]
        H = np.diag(self.diag)
        scaled = False
        tol = self.opt.tol
        reason = "max_iters"
        it = 0
        for it in range(1, self.opt.max_iters + 1):
            if self.projected_gradient(x, g) < tol:
                reason = "projected_gradient"
                it -= 1
                break
            d = self.direction(H, x, g)
            if np.dot(g, d) >= 0:
                H = np.diag(self.diag)
                d = self.direction(H, x, g)
            xn, fn = self.line_search(x, f, g, d)
            if xn is None:
                H = np.diag(self.diag)
                xn, fn = self.line_search(x, f, g, self.direction(H, x, g))
                if xn is None:
                    reason = "line_search"
                    it -= 1
                    break
            report_n, gn = self.evaluate(xn)
            s, y = xn - x, gn - g
            sy = float(np.dot(s, y))
            if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                if not scaled:
                    H = H * (sy / float(y @ H @ y))
                    scaled = True
                rho = 1.0 / sy
                Hy = H @ y
                H = (H - rho * (np.outer(Hy, s) + np.outer(s, Hy))
                     + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s))
            delta = fn - f
            x, f, g, report = xn, fn, gn, report_n
            history.append(report.penalized)
            log.debug("iter %d J=%.10g dJ=%.3g", it, report.penalized, -delta)
            if abs(delta) < tol * max(1.0, abs(f)):
                reason = "delta_J"
                break
        return x, report, it, reason, history


def _initial_guess(problem: Problem, rng) -> np.ndarray:
    m, n = problem.grid.m, problem.n
    return np.concatenate([rng.uniform(0.0, 1.0, m), rng.uniform(0.0, 1.0, n),
                           rng.uniform(0.0, 1.0, n)])


def optimize(problem: Problem, opt: Optional[OptimizerConfig] = None) -> DesignResult:
    """Maximize the penalized energy from ``opt.restarts`` random starts.

    Restart ``r`` draws its start from ``default_rng([seed, r])``; the best
    restart (highest ``J``, lowest index on ties) is returned with its
    diagnostics filled in.
    """
    opt = opt or OptimizerConfig()
    if opt.restarts < 1:
        raise ConfigError("restarts", "at least one restart is required")
    best = None
    values = []
    for r in range(opt.restarts):
        rng = np.random.default_rng([opt.seed, r])
        search = _Search(problem, opt)
        x0 = _initial_guess(problem, rng)
        try:
            x, report, iters, reason, history = search.run(x0)
        except InfeasibleTrajectoryError as exc:
            log.warning("restart %d infeasible: %s", r, exc)
            values.append(None)
            continue
        values.append(report.penalized)
        log.info("restart %d: J=%.8g after %d iterations (%s)", r, report.penalized, iters, reason)
        if best is None or report.penalized > best[1].penalized:
            best = (x, report, iters, reason, history, r)
    if best is None:
        raise AllRestartsInfeasibleError("no restart produced a feasible trajectory")

    x, report, iters, reason, history, r = best
    feasible = [v for v in values if v is not None]
    if len(feasible) > 1:
        log.info("restart dispersion: J in [%.8g, %.8g]", min(feasible), max(feasible))
    decision = DecisionVector.from_array(x, problem.grid.m, problem.n)
    return finalize(problem, decision, iterations=iters, converged=reason in ("delta_J", "projected_gradient"),
                    seed=opt.seed, stop_reason=reason, restart=r, history=history,
                    restart_values=values)


def finalize(problem: Problem, decision: DecisionVector, **kw) -> DesignResult:
    """Re-evaluate ``decision`` and attach trajectory, costate and arc labels."""
    report, grad = objective_gradient(decision, problem)
    _, traj = penalized_objective(decision, problem)
    terminal = np.zeros(model.state_size(problem.n))
    terminal[1::2] = -2.0 * problem.penalty_w * traj.samples[-1, 1::2]
    costate = integrate_costate(traj, decision.u, decision.c, terminal, problem.grid,
                                problem.harmonics, problem.params)
    switching = model.switching_value(traj.samples, costate.samples)
    validity = model.validity_functional(decision.u, problem.harmonics.k_max, problem.grid)
    if validity > 0.5:
        log.warning("plane-wave validity integral %.3g exceeds 0.5", validity)
    kw.setdefault("iterations", 0)
    kw.setdefault("converged", False)
    kw.setdefault("seed", 0)
    return DesignResult(decision=decision, trajectory=traj, report=report, validity=validity,
                        costate=costate, switching=switching,
                        arcs=classify_arcs(decision.u, switching, problem.bounds), **kw)
