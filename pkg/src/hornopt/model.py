"""Domain types and pointwise functions of the controlled Webster system.

A state is a float array of length ``2N+1`` laid out as::

    [D, phi_1, phi_1', phi_2, phi_2', ..., phi_N, phi_N']

so ``state[..., 0]`` is the diameter, ``state[..., 1::2]`` the modal
potentials and ``state[..., 2::2]`` their derivatives.  Costates use the same
layout.  Every function below accepts a leading batch axis, which is how the
sweeps evaluate whole trajectories at once.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SingularGeometryError
from .grid import Grid, quadrature


@dataclass(frozen=True)
class PhysicalParams:
    """Air and duct constants (SI units)."""

    rho0: float = 1.0
    c: float = 340.0
    f0: float = 440.0
    L: float = 0.772

    def __post_init__(self):
        for name in ("rho0", "c", "f0", "L"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(name, f"must be a positive number, got {value!r}")

    @property
    def k0(self) -> float:
        """Fundamental wave number ``2*pi*f0/c``."""
        return 2.0 * math.pi * self.f0 / self.c

    @property
    def energy_scale(self) -> float:
        return math.pi * self.rho0 / 8.0


@dataclass(frozen=True)
class HarmonicSpec:
    """Harmonic multipliers ``j_n`` and the wave numbers ``k_n = j_n * k0``."""

    multipliers: tuple
    k0: float
    wave_numbers: np.ndarray = field(init=False, repr=False, compare=False)
    k2: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mult = tuple(int(j) for j in self.multipliers)
        if len(mult) < 1:
            raise ConfigError("multipliers", "at least one harmonic is required")
        if any(j != jj for j, jj in zip(mult, self.multipliers)) or mult[0] < 1:
            raise ConfigError("multipliers", "multipliers must be positive integers")
        if any(b <= a for a, b in zip(mult, mult[1:])):
            raise ConfigError("multipliers", "multipliers must be strictly increasing")
        if not self.k0 > 0:
            raise ConfigError("k0", f"must be positive, got {self.k0!r}")
        object.__setattr__(self, "multipliers", mult)
        k = np.array(mult, dtype=float) * self.k0
        k.flags.writeable = False
        k2 = k * k
        k2.flags.writeable = False
        object.__setattr__(self, "wave_numbers", k)
        object.__setattr__(self, "k2", k2)

    @classmethod
    def from_params(cls, multipliers, params: PhysicalParams):
        return cls(tuple(multipliers), params.k0)

    @property
    def n(self) -> int:
        return len(self.multipliers)

    @property
    def k_max(self) -> float:
        return float(self.wave_numbers[-1])


@dataclass(frozen=True)
class ControlBounds:
    """Box ``[d_lo, d_hi]`` on the diameter slope and the diameter floor ``a``."""

    d_lo: float = -0.2
    d_hi: float = 0.2
    a: float = 1e-3

    def __post_init__(self):
        if not self.d_lo < self.d_hi:
            raise ConfigError("d_lo", f"must be below d_hi ({self.d_lo} >= {self.d_hi})")
        if not self.a > 0:
            raise ConfigError("a", f"diameter floor must be positive, got {self.a}")


def state_size(n_modes: int) -> int:
    return 2 * n_modes + 1


def make_state(d, phi, dphi):
    """Pack a diameter and per-mode ``phi``/``phi'`` values into one state array."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    dphi = np.atleast_1d(np.asarray(dphi, dtype=float))
    if phi.shape != dphi.shape:
        raise ValueError("phi and dphi must have the same shape")
    out = np.empty(phi.shape[:-1] + (2 * phi.shape[-1] + 1,))
    out[..., 0] = d
    out[..., 1::2] = phi
    out[..., 2::2] = dphi
    return out


def _diameter(state):
    x1 = state[..., 0]
    if np.ndim(x1) == 0:
        if not x1 > 0:
            raise SingularGeometryError(float(x1))
    elif not np.all(x1 > 0):
        raise SingularGeometryError(float(np.min(x1)))
    return x1


def _expand(value):
    # scalar or batch of scalars -> broadcastable against the mode axis
    return np.asarray(value, dtype=float)[..., None]


def webster_rhs(state, u, harmonics: HarmonicSpec):
    """Right-hand side of the controlled system.

    ``D' = u`` and, per mode, ``phi' = dphi``,
    ``dphi' = -2 (u/D) dphi - k_n^2 phi``.
    """
    state = np.asarray(state, dtype=float)
    x1 = _diameter(state)
    dphi = state[..., 2::2]
    out = np.empty_like(state)
    out[..., 0] = u
    out[..., 1::2] = dphi
    out[..., 2::2] = -2.0 * _expand(u / x1) * dphi - harmonics.k2 * state[..., 1::2]
    return out


def _modal_density(state, coeffs, harmonics):
    # sum_n c_n^2 (dphi_n^2 + k_n^2 phi_n^2), per sample
    phi = state[..., 1::2]
    dphi = state[..., 2::2]
    c2 = np.square(np.asarray(coeffs, dtype=float))
    return np.sum(c2 * (dphi * dphi + harmonics.k2 * phi * phi), axis=-1)


def energy_integrand(state, coeffs, harmonics: HarmonicSpec, params: PhysicalParams):
    """Energy line density ``(pi rho0/8) D^2 sum c_n^2 (phi_n'^2 + k_n^2 phi_n^2)`` in J/m."""
    state = np.asarray(state, dtype=float)
    x1 = _diameter(state)
    return params.energy_scale * x1 * x1 * _modal_density(state, coeffs, harmonics)


def switching_value(state, costate):
    """``dH/du = mu_1 - (2/D) sum_n mu_{2n+1} phi_n'``."""
    state = np.asarray(state, dtype=float)
    costate = np.asarray(costate, dtype=float)
    x1 = _diameter(state)
    return costate[..., 0] - (2.0 / x1) * np.sum(costate[..., 2::2] * state[..., 2::2], axis=-1)


def hamiltonian(state, u, coeffs, costate, harmonics: HarmonicSpec, params: PhysicalParams):
    """Hamiltonian of the design problem.

    Evaluated in control-affine form ``H0(X, mu) + u * dH/du`` so that the
    affinity in ``u`` holds to rounding.
    """
    state = np.asarray(state, dtype=float)
    costate = np.asarray(costate, dtype=float)
    drift = energy_integrand(state, coeffs, harmonics, params) + np.sum(
        costate[..., 1::2] * state[..., 2::2]
        - costate[..., 2::2] * harmonics.k2 * state[..., 1::2],
        axis=-1,
    )
    return drift + u * switching_value(state, costate)


def costate_rhs(costate, state, u, coeffs, harmonics: HarmonicSpec, params: PhysicalParams):
    """Adjoint right-hand side ``mu' = -dH/dX``."""
    state = np.asarray(state, dtype=float)
    costate = np.asarray(costate, dtype=float)
    x1 = _diameter(state)
    phi = state[..., 1::2]
    dphi = state[..., 2::2]
    mu_even = costate[..., 1::2]
    mu_odd = costate[..., 2::2]
    c2 = np.square(np.asarray(coeffs, dtype=float))
    quarter = 2.0 * params.energy_scale  # pi rho0 / 4
    k2 = harmonics.k2
    x1e = x1[..., None] if np.ndim(x1) else x1
    ratio = _expand(u / x1)

    out = np.empty(np.broadcast(costate, state).shape)
    out[..., 0] = (
        -quarter * x1 * _modal_density(state, coeffs, harmonics)
        - 2.0 * (u / (x1 * x1)) * np.sum(mu_odd * dphi, axis=-1)
    )
    out[..., 1::2] = k2 * (mu_odd - quarter * c2 * x1e * x1e * phi)
    out[..., 2::2] = 2.0 * ratio * mu_odd - mu_even - quarter * c2 * x1e * x1e * dphi
    return out


def validity_functional(u_grid, k_max: float, grid: Grid) -> float:
    """Plane-wave validity integral ``(1/2) int k R'^2 dx`` with ``R' = u/2``.

    Values well below 1 keep the Webster model meaningful.
    """
    u = grid.check(u_grid, "u_grid")
    return 0.5 * quadrature(k_max * (0.5 * u) ** 2, grid)
