"""Exception hierarchy."""


class SalvoError(Exception):
    """Base class for all package errors."""


class GeometryError(SalvoError):
    """Singular engagement geometry (coincident points, R <= 0)."""


class GeometryInconsistencyError(GeometryError):
    """Relay inputs that cannot describe a planar triangle."""


class BoundaryDataError(SalvoError, ValueError):
    """Boundary values that make the exponential gains undefined."""


class TimeOrderError(SalvoError, ValueError):
    pass


class ReferenceRangeError(SalvoError, ValueError):
    """Reference trajectory evaluated outside its [t0, tf] window."""


class SegmentFeasibilityError(BoundaryDataError):
    """A piecewise segment whose terminal does not contract the state."""


class ModeError(SalvoError, ValueError):
    """Operation requested on a trace produced by an incompatible law."""


class ConfigError(SalvoError, ValueError):
    """Scenario file problem; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None, key=None):
        self.line = line
        self.source = source
        self.key = key
        self.bare_message = message
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
