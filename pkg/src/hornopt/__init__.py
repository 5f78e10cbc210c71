"""Bore-profile design for axisymmetric horns by optimal control of the Webster equation."""

from .errors import (
    AllRestartsInfeasibleError,
    BracketFailureError,
    ConfigError,
    GridMismatchError,
    HornoptError,
    InfeasibleTrajectoryError,
    SingularGeometryError,
)
from .grid import Grid, quadrature
from .integrate import CostateTrajectory, Trajectory, integrate_costate, integrate_state
from .model import (
    ControlBounds,
    HarmonicSpec,
    PhysicalParams,
    costate_rhs,
    energy_integrand,
    hamiltonian,
    make_state,
    switching_value,
    validity_functional,
    webster_rhs,
)
from .optimize import (
    DecisionVector,
    DesignResult,
    ObjectiveReport,
    OptimizerConfig,
    Problem,
    objective_gradient,
    optimize,
    penalized_objective,
    project,
)
from .spectral import BoreProfile, EigenPair, analytic_oracle, eigen_solve, orthogonality_check

__version__ = "0.1.0"
