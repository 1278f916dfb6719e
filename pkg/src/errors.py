"""
Exception hierarchy for the half-space Boussinesq simulator.

Validation problems derive from ValueError, numerical failures from
ArithmeticError, so callers can catch whichever family they care about.
"""

from typing import Optional


class BoussinesqError(Exception):
    """Base class for every error raised by this package"""


class GridError(BoussinesqError, ValueError):
    """Invalid grid parameters"""


class SpectralError(BoussinesqError, ValueError):
    """Dimension mismatch or broken Hermitian symmetry"""


class NegativeOrderError(BoussinesqError, ValueError):
    """Negative horizontal power applied to data with horizontal-mean content"""


class PropagatorError(BoussinesqError, ValueError):
    """Zero wavevector or negative time handed to the linear propagator"""


class RateParameterError(BoussinesqError, ValueError):
    """(sigma, delta) outside the admissible set of the decay theorem"""


class ProfileError(BoussinesqError, ValueError):
    """Radial spectrum not admissible for the requested norm"""


class SeriesError(BoussinesqError, ValueError):
    """Empty norm series, non-increasing times or negative norms"""


class FitError(BoussinesqError, ArithmeticError):
    """Decay fit impossible (too few samples, nonpositive values)"""


class BlowUpError(BoussinesqError, ArithmeticError):
    """NaN or Inf detected in a physical field"""


class DuhamelContractionError(BoussinesqError, ArithmeticError):
    """Picard residual increased; the final time is too large"""


class QuadratureError(BoussinesqError, ArithmeticError):
    """Panel doubling did not reach the requested tolerance"""


class ConfigError(BoussinesqError, ValueError):
    """Malformed run configuration"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
