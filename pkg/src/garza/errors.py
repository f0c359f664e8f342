"""Exception hierarchy shared across the package."""


class GarzaError(Exception):
    """Base class for all errors raised by this package."""


class JetDomainError(GarzaError, ValueError):
    """An elementary function was lifted outside its domain."""


class JetMismatchError(GarzaError, ValueError):
    """Two jets with different expansion points or orders were combined."""


class ZeroDenominatorError(GarzaError, ZeroDivisionError):
    """Jet division with a vanishing leading coefficient."""


class DerivativeOrderError(GarzaError, ValueError):
    """A jet of order zero was differentiated."""


class ChebyshevViolation(GarzaError):
    """A diagonal entry of the f-triangle vanished or changed sign.

    ``index`` is the 1-based column index ``t`` and ``location`` the point in
    c-space where the failure was detected.
    """

    def __init__(self, message, index=None, location=None):
        super().__init__(message)
        self.index = index
        self.location = location


class ParameterError(GarzaError, ValueError):
    """Model parameters or design region violate family constraints."""


class RangeError(GarzaError, ValueError):
    """A location lies outside the model's design region."""


class ShapeError(GarzaError, ValueError):
    """Matrix dimensions do not agree."""


class DesignError(GarzaError, ValueError):
    """A design violates its invariants (weights, ordering, space)."""


class SolverError(GarzaError):
    """The moment-matching solver failed to converge.

    Carries the best scaled residual reached and, when raised from the
    inductive reduction, the index of the failing induction step.
    """

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class SignContractError(SolverError):
    """A converged solution carries a non-positive weight."""


class OracleError(GarzaError):
    """An algebraic oracle found a configuration violating its hypotheses."""


class CriterionError(GarzaError):
    """An optimality criterion is undefined for the designs considered."""
