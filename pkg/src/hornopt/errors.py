"""Exception hierarchy shared by every hornopt module."""


class HornoptError(Exception):
    """Base class for all errors raised by hornopt."""


class SingularGeometryError(HornoptError, ValueError):
    """Raised when a pointwise function sees a non-positive diameter."""

    def __init__(self, x1):
        self.x1 = x1
        super().__init__(f"diameter must be positive, got x1={x1!r}")


class InfeasibleTrajectoryError(HornoptError):
    """Raised when a sweep drives the diameter below its floor."""

    def __init__(self, node, value, floor):
        self.node = node
        self.value = value
        self.floor = floor
        super().__init__(
            f"diameter {value!r} below floor {floor!r} at node {node}"
        )


class GridMismatchError(HornoptError, ValueError):
    """Raised when an array does not have one entry per grid node."""


class BracketFailureError(HornoptError):
    """Raised when the eigenvalue sweep hits its ceiling too early."""


class AllRestartsInfeasibleError(HornoptError):
    """Raised when no optimizer restart yields a feasible trajectory."""


class ConfigError(HornoptError, ValueError):
    """Raised on an invalid configuration value; names the field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
