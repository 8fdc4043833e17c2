class HeavySpikeError(Exception):
    """Base class for errors raised by heavyspike."""


class InvalidParameterError(HeavySpikeError, ValueError):
    def __init__(self, message: str, parameter: str | None = None):
        super().__init__(message)
        self.parameter = parameter


class InvalidDimensionError(InvalidParameterError):
    pass


class CapExceededError(HeavySpikeError):
    """Refusal to run an enumeration or allocation above a configured cap."""


class NumericFailureError(HeavySpikeError, ArithmeticError):
    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class DegenerateInputError(HeavySpikeError, ValueError):
    pass
