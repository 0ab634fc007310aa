"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Raised when array shapes do not match the operator or network."""


class InvalidPartitionError(ValueError):
    """Raised when index sets do not form a partition (or a perfect matching)."""


class InvalidNetworkError(ValueError):
    """Raised when a network's layers do not chain or fail validation."""


class EmptyInputError(ValueError):
    """Raised for empty sample sets, distributions or template collections."""


class NumericalFailure(ArithmeticError):
    """Non-finite objective or gradient during optimization."""

    def __init__(self, iteration: int, message: str = "non-finite value"):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration
