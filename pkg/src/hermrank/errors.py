"""Exception hierarchy.

The CLI maps these onto exit codes: ``InputError`` subclasses exit with 2,
``NumericalError`` subclasses with 3.
"""


class HermrankError(Exception):
    """Base class for all package errors."""


class InputError(HermrankError, ValueError):
    """Invalid user input: malformed spec, out-of-range parameter."""


class NumericalError(HermrankError, ArithmeticError):
    """A numerical routine failed or produced an untrustworthy result."""


class SpecError(InputError):
    pass


class DomainError(InputError):
    pass


class BoundaryExcluded(InputError):
    """Parameters sit on a logarithmic regime boundary."""


class NonPolynomialSpec(InputError):
    pass


class ConstantFunction(InputError):
    """The transformation is constant, so no rank or zero set exists."""


class SymmetricFunction(InputError):
    """Scale perturbations cannot change the rank of a symmetric function.

    Every non-constant even function has Hermite rank exactly 2, whatever the
    scale, so a scale scan would be vacuous.
    """


class NumericalFailure(NumericalError):
    pass


class EvaluationError(NumericalError):
    """The transformation produced a non-finite value at a quadrature node."""


class RankExceedsTruncation(NumericalError):
    """No coefficient up to the truncation order is nonzero, yet energy remains."""


class EmbeddingError(NumericalError):
    """Circulant embedding has a materially negative eigenvalue."""
