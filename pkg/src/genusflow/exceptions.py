"""Exception hierarchy shared by all modules."""


class GenusFlowError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(GenusFlowError, ValueError):
    """Invalid grid, surface, family or solver parameters."""


class DomainError(GenusFlowError, ValueError):
    """A surface does not fit inside the computational grid."""


class SurfaceExtinct(GenusFlowError):
    """The level set function has no zero set left."""


class NumericalBlowup(GenusFlowError, FloatingPointError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"non-finite values at step {step_index}")


class InternalConsistencyError(GenusFlowError, RuntimeError):
    """Contour and sign data disagree (extraction bug)."""


class AxisCrossing(GenusFlowError):
    """A shooting trajectory reached the rotation axis non-perpendicularly."""

    def __init__(self, state, message=None):
        self.state = state
        super().__init__(message or f"profile hit the axis at state {state}")


class BracketError(GenusFlowError, ValueError):
    """A root bracket does not contain a sign change."""

    def __init__(self, message, scan=None):
        self.scan = scan
        super().__init__(message)


class NoPinchError(GenusFlowError, ValueError):
    """A width series is not decreasing, so no pinch time can be fitted."""


class SetupError(GenusFlowError, ValueError):
    """An experiment's preconditions (endpoint labels, initial gaps) fail."""
