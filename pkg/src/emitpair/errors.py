"""Exception hierarchy shared by all emitpair modules.

The CLI maps these onto exit codes: ConfigError -> 1, numerical errors
(SingularSystemError, UndefinedCorrelationError, ...) -> 2, geometry and
packing errors -> 3.
"""


class EmitpairError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EmitpairError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedOrderError(EmitpairError, ValueError):
    """Cylinder-function order outside the implemented set {0, 1}."""


class CoincidentPointsError(DomainError):
    """Source and observation point coincide where a finite value is required."""


class GeometryError(EmitpairError, ValueError):
    """Invalid spatial configuration (duplicate scatterers, point on a scatterer, ...)."""


class PackingError(GeometryError):
    """Rejection sampling could not place the requested scatterers."""


class DegenerateScattererError(DomainError):
    """Zero bare polarizability cannot be dressed."""


class SingularSystemError(EmitpairError, ArithmeticError):
    """Foldy-Lax interaction matrix is numerically singular."""

    def __init__(self, message: str, cond_estimate: float = float("inf")):
        super().__init__(message)
        self.cond_estimate = cond_estimate


class UndefinedCorrelationError(EmitpairError, ZeroDivisionError):
    """Correlation denominator vanished (both emitters dark at a detector)."""


class UndefinedProjectionError(EmitpairError, ZeroDivisionError):
    """Post-detection state has zero norm and cannot be normalized."""


class FarFieldValidityError(DomainError):
    """Far-field quadrature requested at a radius where it is not valid."""


class ConfigError(EmitpairError, ValueError):
    """Invalid run configuration (unknown keys, missing sections, bad values)."""
