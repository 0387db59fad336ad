"""Exception hierarchy shared by every module."""


class FastLstdError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FastLstdError, ValueError):
    """Invalid parameters (step-size constants, dimensions, grid config...)."""


class EmptyPoolError(FastLstdError, ValueError):
    """A solver or sampler was handed an empty sample pool."""


class FormatError(FastLstdError, ValueError):
    """A data file does not follow the expected record layout."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularityError(FastLstdError, ArithmeticError):
    """Linear system is singular or too ill-conditioned to trust."""

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class UpdateBreakdownError(SingularityError):
    """A Sherman-Morrison rank-one update hit a vanishing denominator."""

    def __init__(self, sample_index, denominator):
        self.sample_index = sample_index
        self.denominator = denominator
        super().__init__(
            f"Sherman-Morrison update broke down at sample {sample_index} "
            f"(denominator {denominator:.3e})"
        )


class RegimeError(FastLstdError, ValueError):
    """Bound parameters fall outside the regime where a formula is valid."""


class StepRegimeError(RegimeError):
    """A contraction factor went negative: step sizes are too large."""


class SampleSizeError(FastLstdError, ValueError):
    """Too few independent runs for a Monte-Carlo check."""


class StateError(FastLstdError, RuntimeError):
    """Operation not valid in the current iterate state."""


class ScaleError(FastLstdError, ValueError):
    """Problem too large for exhaustive enumeration."""
