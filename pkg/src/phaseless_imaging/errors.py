"""Exception hierarchy shared by the library and the command line tool."""


class ImagingError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(ImagingError, ValueError):
    """An operation was called on inputs outside its domain."""


class SingularGreenError(PreconditionError):
    """Source and observation points coincide.

    ``index`` is the offending transducer (or grid) index when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateGridError(PreconditionError):
    pass


class PhaseChainError(ImagingError):
    """A reference entry needed to propagate phases is (numerically) zero."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConfigError(ImagingError):
    pass


class ParseError(ImagingError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConsistencyError(ImagingError):
    """Intensity data and illumination plan do not agree."""
