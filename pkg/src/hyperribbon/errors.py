"""Exception types raised across the package."""


class HyperribbonError(Exception):
    """Base class for component errors (CLI exit code 1)."""


class DomainError(HyperribbonError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(HyperribbonError, ArithmeticError):
    """An iterative solver failed to converge within its sweep limit."""


class SingularMinorError(HyperribbonError, ArithmeticError):
    """A leading principal minor is numerically singular."""


class StepSizeUnderflow(HyperribbonError, ArithmeticError):
    """The Taylor integrator was forced below its minimum step."""


class ModelEvaluationError(HyperribbonError, ArithmeticError):
    """A model could not be evaluated (e.g. a vanishing denominator)."""


class DegenerateFitError(HyperribbonError):
    """A two-segment fit collapsed to a single line."""


class SamplerTimeout(HyperribbonError):
    """Rejection sampling accepted too few candidates to make progress."""


class DimensionMismatch(HyperribbonError, ValueError):
    """Array shapes do not agree."""
