"""Exception types shared across the package.

The CLI maps these onto process exit codes, so raising the right type
matters more than the message text.
"""


class PoseDsError(Exception):
    """Base class for everything raised deliberately by this package."""


class DemoLoadError(PoseDsError):
    """A demonstration file could not be parsed or failed validation.

    ``row`` is the offending 1-based data row where that is known,
    otherwise None.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class DegenerateDemoError(PoseDsError):
    """Demo cannot support model fitting (zero length, start at goal, ...)."""


class FitNonConvergenceError(PoseDsError):
    """Fitting stopped at the layer budget with the residual above tolerance."""


class InversionError(PoseDsError):
    """A map inverse did not reach its residual target within the iteration cap."""


class NumericalConsistencyError(PoseDsError):
    """An internal numerical identity was violated beyond tolerance."""


class ModelFormatError(PoseDsError):
    """A model file is malformed, has an unknown format version, or fails validation."""
