"""Exception hierarchy shared by every solver module."""


class FlowMapError(Exception):
    """Base class for all errors raised by lagrangian_ac."""


class DomainError(FlowMapError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ShapeError(FlowMapError, ValueError):
    """Array sizes do not match the discretization they are used with."""


class ParameterError(FlowMapError, ValueError):
    """A numerical parameter violates its constraint (positivity, range, ...)."""


class JacobianPositivityError(FlowMapError):
    """The deformation gradient dx/dX is not strictly positive."""

    def __init__(self, message, min_jacobian=None):
        super().__init__(message)
        self.min_jacobian = min_jacobian


class GeometryError(FlowMapError):
    """A radial flow map produced r <= 0 away from the origin."""


class StartupError(FlowMapError):
    """A multistep scheme was called without the history it needs."""


class NewtonConvergenceError(FlowMapError):
    """Damped Newton did not reach the residual tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularTangentError(NewtonConvergenceError):
    """The Newton tangent is singular (or degenerate at the root)."""


class NoInterfaceError(FlowMapError):
    """A profile has no crossing of the requested level."""


class EulerianDivergenceError(FlowMapError):
    """The Eulerian reference solution blew up."""


class ConfigError(FlowMapError, ValueError):
    """Invalid experiment configuration."""


class StepFailure(FlowMapError):
    """A solver error raised inside a time loop, tagged with the step index."""

    def __init__(self, step, cause, partial=None):
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
        self.step = step
        self.cause = cause
        self.partial = partial
