"""Exception hierarchy.

Three failure families, mirrored by the CLI exit codes and the service's
HTTP status mapping:

* invalid parameters (caller passed values outside a type's domain),
* numeric failures (non-positive-semi-definite correlations, root
  brackets without a sign change, quantile arguments outside (0, 1)),
* data failures (malformed or degenerate input tables).
"""


class AdaptDoseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(AdaptDoseError, ValueError):
    """A parameter violates its documented domain (e.g. a rate outside (0, 1))."""


class NumericError(AdaptDoseError):
    """Base class for numeric failures."""


class DomainError(NumericError, ValueError):
    """Argument outside the mathematical domain of a kernel function."""


class NonPSDError(NumericError):
    """A correlation matrix is not positive semi-definite beyond tolerance."""


class BracketingError(NumericError):
    """A root-finding bracket does not enclose a sign change."""


class DataError(AdaptDoseError):
    """Input data is malformed (wrong shape, missing entries, unknown labels)."""


class DegenerateDataError(DataError):
    """Input data is structurally valid but statistically degenerate."""
