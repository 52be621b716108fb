"""Exception hierarchy shared by the toolkit."""


class AuxgripError(Exception):
    """Base class for all toolkit errors."""


class InputError(AuxgripError, ValueError):
    """Invalid argument or data (bad ranges, too few samples, ...)."""


class GeometryError(AuxgripError, ValueError):
    """A cell or frame geometry is degenerate (intersecting struts, zero-length beams)."""


class ConstructionError(AuxgripError):
    """A generated model violates a structural invariant such as connectivity."""


class SingularStiffnessError(AuxgripError):
    """The reduced stiffness matrix is singular.

    ``modes`` lists human-readable names of the unrestrained rigid-body or
    mechanism modes that were detected.
    """

    def __init__(self, message, modes=()):
        super().__init__(message)
        self.modes = list(modes)


class ConvergenceError(AuxgripError):
    """Newton iteration failed within the substep / iteration budget."""

    def __init__(self, message, last_load_factor=0.0, residual_norm=float("nan")):
        super().__init__(message)
        self.last_load_factor = last_load_factor
        self.residual_norm = residual_norm


class ContactChatterError(ConvergenceError):
    """Contact active set kept changing without settling."""

    def __init__(self, message, step_index, **kwargs):
        super().__init__(message, **kwargs)
        self.step_index = step_index


class SingularityError(AuxgripError):
    """Mechanism configuration where the force-torque relation is singular."""


class ScheduleError(AuxgripError):
    """Crank-angle schedule does not cover the requested angle."""


class IngestionError(AuxgripError):
    """Malformed measurement file; ``row`` is the 1-based line number when known."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class FitError(AuxgripError):
    """Least-squares fit cannot be computed (rank deficiency, too few points)."""
