"""Exception types shared across the toolkit."""


class FinslerLabError(Exception):
    """Base class for all toolkit errors."""


class ZeroVector(FinslerLabError):
    """A direction-dependent quantity was requested at (numerically) zero velocity."""


class NotConvex(FinslerLabError):
    """The fundamental tensor failed positive-definiteness at a sampled direction."""


class NoConvergence(FinslerLabError):
    """Damped Newton failed to converge; the norm family is likely invalid."""


class LeftChart(FinslerLabError):
    """A trajectory exited an interval chart."""


class CriticalPoint(FinslerLabError):
    """A gradient-referenced operator was requested where the derivative vanishes."""


class BadN(FinslerLabError):
    """Dimension parameter outside (-inf, 0) and [n, +inf]."""


class SolverDiverged(FinslerLabError):
    """The linear step solve did not reach the requested residual."""


class OutOfRange(FinslerLabError):
    """Argument outside the admissible range (times within a trace, masses in [0,1])."""


class BadRange(FinslerLabError):
    """Initial datum violates the required 0 <= u0 <= 1 range."""


class CurvatureNotCertified(FinslerLabError):
    """Sampled curvature does not dominate the declared lower bound."""


class NotNormalized(FinslerLabError):
    """Total measure is not 1 where a probability measure is required."""


class EmptySet(FinslerLabError):
    """Boundary measure of the empty set was requested."""


class FullSet(FinslerLabError):
    """Boundary measure of the full space was requested."""


class ConfigError(FinslerLabError):
    """Malformed run configuration."""
