"""Exception hierarchy shared by all specloc modules."""


class SpeclocError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(SpeclocError):
    """An operation was called with arguments violating its preconditions."""


class GenerationFailure(SpeclocError):
    """A rejection sampler exhausted its retry budget."""


class ParseError(SpeclocError):
    """A file could not be parsed (malformed line, out-of-range index)."""


class ValidationError(SpeclocError):
    """Parsed data violates a structural invariant (degree, duplicate edge)."""


class DimensionMismatch(SpeclocError):
    """Vector/matrix shapes are incompatible."""


# deloc-facing alias; same failure mode, different historical name.
DimensionError = DimensionMismatch


class CapExceeded(SpeclocError):
    """A dense-only operation was requested above the dense size cap."""


class ConvergenceFailure(SpeclocError):
    """An iterative eigensolver did not converge within its budget."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class SolveFailure(SpeclocError):
    """A linear solve did not reach the requested residual."""

    def __init__(self, message, worst_residual=None):
        super().__init__(message)
        self.worst_residual = worst_residual


class QuadratureBudget(SpeclocError):
    """Estimated quadrature error exceeds the allowed budget."""


class EmptyWindow(SpeclocError):
    """A spectral window contains no eigenvalues."""


class DegenerateDraw(SpeclocError):
    """A random draw collapsed to (numerical) zero after all retries."""


class DomainError(SpeclocError):
    """Function evaluated outside its mathematical domain."""
