"""Uniform spatial grids and the trapezoidal quadrature used throughout."""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``m`` nodes on ``[0, length]``."""

    m: int
    length: float
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3:
            raise ValueError(f"grid needs at least 3 nodes, got m={self.m}")
        if not self.length > 0:
            raise ValueError(f"grid length must be positive, got {self.length}")
        nodes = np.linspace(0.0, float(self.length), int(self.m))
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def h(self) -> float:
        return float(self.length) / (self.m - 1)

    def weights(self) -> np.ndarray:
        """Trapezoid masses: ``h`` inside, ``h/2`` at both ends."""
        w = np.full(self.m, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def check(self, values, name="values"):
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.m:
            raise GridMismatchError(
                f"{name} has {values.shape[0]} entries, grid has {self.m} nodes"
            )
        return values


def quadrature(values, grid: Grid) -> float:
    """Composite trapezoid rule ``sum h*(v_i + v_{i+1})/2`` over the grid."""
    v = grid.check(values)
    return float(grid.h * (0.5 * (v[0] + v[-1]) + v[1:-1].sum()))
