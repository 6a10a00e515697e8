"""Exception types raised across the package."""


class StarnavError(Exception):
    """Base class for all package errors."""


class GeometryError(StarnavError, ValueError):
    """Invalid geometric input (degenerate or malformed polygon, bad radius)."""


class NoValidCenter(StarnavError):
    """No admissible star center was found for an obstacle cluster."""


class RobotInCollision(StarnavError):
    """The robot position is not in the free space."""


class InteriorPoint(StarnavError):
    """A field or gamma query was made at a point inside a star obstacle."""


class StartInObstacle(StarnavError):
    """The reference path start lies inside the star world obstacles."""


class ApproxTooCoarse(StarnavError):
    """The polynomial path approximation error is not below the clearance."""

    def __init__(self, eps, rho):
        super().__init__(f"approximation error {eps:.3g} >= clearance {rho:.3g}")
        self.eps = eps
        self.rho = rho


class InputOutOfBounds(StarnavError, ValueError):
    """A control input lies outside the admissible input box."""


class TunnelViolated(StarnavError):
    """The initial tracking error is outside the tunnel, so the idle sequence is infeasible."""


class AssumptionViolated(StarnavError):
    """A scripted obstacle moved onto the robot (quasi-static / non-aggressive assumption broken)."""
