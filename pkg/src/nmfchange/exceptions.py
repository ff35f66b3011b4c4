"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid detector settings or unsearchable input dimensions."""


class IngestionError(ValueError):
    """Input data could not be parsed into a finite numeric matrix."""


class DivergenceUndefined(ArithmeticError):
    """KL divergence requested where the model is zero but the data is not."""


class NumericalFailure(ArithmeticError):
    """A factorization produced a non-finite loss.

    Attributes
    ----------
    iteration : int
        Update index at which the failure was detected.
    """

    def __init__(self, message: str, iteration: int = -1):
        super().__init__(message)
        self.iteration = iteration
