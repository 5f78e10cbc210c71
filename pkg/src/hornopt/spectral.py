"""Direct spectral problem for a given bore: ``(D^2 phi')' + k^2 D^2 phi = 0``.

Boundary conditions are ``phi'(0) = 0`` (closed end) and ``phi(L) = 0`` (open
end).  Eigenpairs are found by shooting on ``k``: the self-adjoint system

    phi' = psi / D^2,    psi' = -k^2 D^2 phi,    phi(0) = 1, psi(0) = 0

is integrated with classical RK4 (vectorized over a batch of ``k`` values),
sign changes of ``phi(L; k)`` are bracketed on a sweep and refined by
bisection.  Working with ``psi = D^2 phi'`` means ``D'`` is never needed, so
profiles with slope discontinuities are handled as they come.
"""

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import BracketFailureError, GridMismatchError
from .grid import Grid
from .model import PhysicalParams

K_RTOL = 1e-10


@dataclass(frozen=True)
class BoreProfile:
    grid: Grid
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.shape != (self.grid.m,):
            raise GridMismatchError(f"profile has {d.size} values, grid has {self.grid.m} nodes")
        if not np.all(d > 0):
            raise ValueError(f"diameter must be positive everywhere, min is {d.min()}")
        object.__setattr__(self, "d", d)

    @property
    def q(self) -> np.ndarray:
        """``2 D'/D`` at the nodes (finite differences, for reporting)."""
        return 2.0 * np.gradient(self.d, self.grid.nodes) / self.d


@dataclass
class EigenPair:
    k: float
    lam: float
    phi: np.ndarray
    dphi: Optional[np.ndarray] = None

    @property
    def interior_zeros(self) -> int:
        return count_sign_changes(self.phi[:-1])


def count_sign_changes(values) -> int:
    s = np.sign(np.asarray(values))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


class _Shooter:
    def __init__(self, profile: BoreProfile):
        grid = profile.grid
        self.h = grid.h
        d2 = profile.d ** 2
        mid = CubicSpline(grid.nodes, profile.d)(grid.nodes[:-1] + 0.5 * grid.h) ** 2
        self.d2 = d2
        self.d2_mid = mid
        self.m = grid.m

    def shoot(self, k, keep=False):
        """Integrate for each wave number in ``k``; returns ``phi`` (and ``psi``) per node."""
        k2 = np.atleast_1d(np.asarray(k, dtype=float)) ** 2
        h = self.h
        phi = np.ones_like(k2)
        psi = np.zeros_like(k2)
        if keep:
            phis = np.empty((self.m, k2.size))
            psis = np.empty((self.m, k2.size))
            phis[0], psis[0] = phi, psi
        d2, dm = self.d2, self.d2_mid
        for i in range(self.m - 1):
            a, b, c = d2[i], dm[i], d2[i + 1]
            k1p, k1s = psi / a, -k2 * a * phi
            p2, s2 = phi + 0.5 * h * k1p, psi + 0.5 * h * k1s
            k2p, k2s = s2 / b, -k2 * b * p2
            p3, s3 = phi + 0.5 * h * k2p, psi + 0.5 * h * k2s
            k3p, k3s = s3 / b, -k2 * b * p3
            p4, s4 = phi + h * k3p, psi + h * k3s
            k4p, k4s = s4 / c, -k2 * c * p4
            phi = phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            psi = psi + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
            if keep:
                phis[i + 1], psis[i + 1] = phi, psi
        if keep:
            return phis, psis
        return phi


def _zero_count(phis):
    # interior sign changes per column, ignoring the open-end node
    inner = phis[:-1]
    s = np.sign(inner)
    return np.count_nonzero((s[1:] * s[:-1]) < 0, axis=0)


def eigen_solve(profile: BoreProfile, n_modes: int, k_max: Optional[float] = None,
                sweep_points: int = 8) -> List[EigenPair]:
    """Smallest ``n_modes`` eigenpairs of the closed/open bore, by shooting.

    The sweep uses ``sweep_points`` samples per ``pi/L``; any sweep interval
    whose zero count jumps by more than one is subdivided before bracketing.
    Raises :class:`BracketFailureError` if ``k_max`` is reached first.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    L = profile.grid.length
    if k_max is None:
        k_max = (4 * n_modes + 8) * math.pi / L
    shooter = _Shooter(profile)
    dk = math.pi / (L * sweep_points)

    brackets = []
    k_lo = 0.0
    phis_lo = shooter.shoot([1e-9 * dk], keep=True)[0][:, 0]
    while len(brackets) < n_modes:
        if k_lo >= k_max:
            raise BracketFailureError(
                f"found {len(brackets)} of {n_modes} eigenvalues below k_max={k_max:g}"
            )
        ks = k_lo + dk * np.arange(1, 33)
        ks = ks[ks <= k_max + 0.5 * dk]
        phis = shooter.shoot(ks, keep=True)[0]
        prev_phi = phis_lo
        prev_k = k_lo
        for j, k in enumerate(ks):
            col = phis[:, j]
            brackets.extend(_split_bracket(shooter, prev_k, k, prev_phi, col))
            prev_phi, prev_k = col, k
            if len(brackets) >= n_modes:
                break
        k_lo, phis_lo = prev_k, prev_phi

    brackets = np.array(brackets[:n_modes])
    lo, hi = brackets[:, 0].copy(), brackets[:, 1].copy()
    f_lo = shooter.shoot(lo)
    while np.any(hi - lo > K_RTOL * hi):
        mid = 0.5 * (lo + hi)
        f_mid = shooter.shoot(mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    ks = 0.5 * (lo + hi)
    phis, psis = shooter.shoot(ks, keep=True)
    return [EigenPair(float(k), float(k * k), phis[:, j], psis[:, j] / shooter.d2)
            for j, k in enumerate(ks)]


def _split_bracket(shooter, k_a, k_b, phi_a, phi_b, depth=0):
    """Brackets ``(k_a', k_b')`` containing exactly one eigenvalue each."""
    jumps = int(_zero_count(phi_b[:, None])[0] - _zero_count(phi_a[:, None])[0])
    crossing = np.sign(phi_a[-1]) != np.sign(phi_b[-1])
    if jumps <= 1 or depth > 30:
        return [(k_a, k_b)] if crossing else []
    k_m = 0.5 * (k_a + k_b)
    phi_m = shooter.shoot([k_m], keep=True)[0][:, 0]
    return (_split_bracket(shooter, k_a, k_m, phi_a, phi_m, depth + 1)
            + _split_bracket(shooter, k_m, k_b, phi_m, phi_b, depth + 1))


def weighted_inner(f, g, profile: BoreProfile) -> float:
    """``int D^2 f g dx`` by composite Simpson on the profile grid."""
    return float(simpson(profile.d ** 2 * f * g, x=profile.grid.nodes))


def weighted_norm(f, profile: BoreProfile) -> float:
    return math.sqrt(weighted_inner(f, f, profile))


def normalized(pair: EigenPair, profile: BoreProfile) -> EigenPair:
    """Copy of ``pair`` scaled to unit ``D^2``-weighted norm."""
    s = weighted_norm(pair.phi, profile)
    dphi = None if pair.dphi is None else pair.dphi / s
    return EigenPair(pair.k, pair.lam, pair.phi / s, dphi)


def orthogonality_check(pairs, profile: BoreProfile) -> float:
    """Largest normalized off-diagonal entry of the ``D^2``-weighted Gram matrix."""
    norms = [weighted_norm(p.phi, profile) for p in pairs]
    worst = 0.0
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            g = weighted_inner(pairs[i].phi, pairs[j].phi, profile) / (norms[i] * norms[j])
            worst = max(worst, abs(g))
    return worst


def analytic_oracle(kind: str, params: PhysicalParams, n: int,
                    grid: Optional[Grid] = None) -> EigenPair:
    """Closed-form mode ``n`` of a cylinder or of a complete cone with apex at 0.

    cylinder: ``k = (2n-1) pi / (2L)``, ``phi = cos(k x)``
    cone:     ``k = n pi / L``,         ``phi = sin(k x) / (k x)``
    """
    if n < 1:
        raise ValueError("mode index starts at 1")
    L = params.L
    grid = grid or Grid(1025, L)
    x = grid.nodes
    if kind == "cylinder":
        k = (2 * n - 1) * math.pi / (2 * L)
        phi = np.cos(k * x)
        dphi = -k * np.sin(k * x)
    elif kind == "cone":
        k = n * math.pi / L
        phi = np.sinc(k * x / math.pi)
        kx = k * x
        with np.errstate(invalid="ignore", divide="ignore"):
            dphi = np.where(kx > 0, k * (kx * np.cos(kx) - np.sin(kx)) / kx ** 2, 0.0)
    else:
        raise ValueError(f"unknown oracle kind {kind!r}; use 'cylinder' or 'cone'")
    return EigenPair(k, k * k, phi, dphi)


def cone_profile(grid: Grid, offset: Optional[float] = None, slope: float = 1.0) -> BoreProfile:
    """Cone ``D = slope * (x + offset)``; the apex sits ``offset`` before the closed end.

    The default offset is ``1e-3 * L``, which keeps ``D(0) > 0``.
    """
    offset = 1e-3 * grid.length if offset is None else offset
    return BoreProfile(grid, slope * (grid.nodes + offset))


def offset_cone_wave_number(n: int, L: float, offset: float) -> float:
    """Exact ``k_n`` of a truncated cone, closed at ``offset`` from the apex.

    Modes are ``sin(k r + theta)/r`` with ``r = x + offset``; the closed end
    gives ``tan(k offset + theta) = k offset`` and the open end
    ``k (L + offset) + theta = n pi``, i.e. ``k L + atan(k offset) = n pi``.
    """
    def root(k):
        return k * L + math.atan(k * offset) - n * math.pi
    return brentq(root, (n - 0.5) * math.pi / L, n * math.pi / L, xtol=1e-15, rtol=1e-15)


def match_targets(pairs, targets) -> list:
    """For each target wave number, the nearest computed one and its relative gap."""
    ks = np.array([p.k for p in pairs])
    out = []
    for t in targets:
        j = int(np.argmin(np.abs(ks - t)))
        out.append({"target": float(t), "k": float(ks[j]), "mode": j + 1,
                    "rel_error": float(abs(ks[j] - t) / t)})
    return out
