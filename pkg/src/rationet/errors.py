"""Exception types shared across the package."""


class RatioNetError(Exception):
    """Base class for all package-specific errors."""


class DomainError(RatioNetError, ValueError):
    """A value fell outside the interval a function is defined on."""


class NegativityError(RatioNetError, ValueError):
    """A generator failed the strict-negativity requirement."""


class NonUniqueError(RatioNetError, ValueError):
    """The per-point objective has more than one stationary point."""


class UnknownPresetError(RatioNetError, KeyError):
    """Requested a loss pair that is not in the catalog."""


class ParamError(RatioNetError, ValueError):
    """A preset parameter is outside its admissible set."""


class DimensionError(RatioNetError, ValueError):
    """Array shapes do not match the network or data contract."""


class EmptyDatasetError(RatioNetError, ValueError):
    """An operation received an empty sample set."""


class EmptyInputError(RatioNetError, ValueError):
    """An operation received an empty collection where one or more items is required."""


class NonFiniteError(RatioNetError, ArithmeticError):
    """A cost or gradient stopped being finite during training."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class PairDomainError(RatioNetError, ValueError):
    """The loss pair is built for the wrong ratio transform or interval."""


class MissingClosedFormError(RatioNetError, ValueError):
    """The operation needs closed-form loss values but the pair has only derivatives."""


class InsufficientDataError(RatioNetError, ValueError):
    """Too few samples to build the requested windows or fits."""


class StoppedError(RatioNetError, RuntimeError):
    """A sequential statistic was advanced after it already crossed its threshold."""


class DegenerateVarianceError(RatioNetError, ValueError):
    """A maximum-likelihood variance estimate collapsed to zero."""


class SignError(RatioNetError, ValueError):
    """A sign-only estimator was asked for a quantity it cannot provide."""


class TargetError(RatioNetError, ValueError):
    """Estimator target and network output range do not agree."""


class FormatError(RatioNetError, ValueError):
    """A serialized record does not parse."""


class CountMismatchError(RatioNetError, ValueError):
    """Paired files disagree on the number of items."""


class ConfigError(RatioNetError, ValueError):
    """An experiment configuration is malformed."""
