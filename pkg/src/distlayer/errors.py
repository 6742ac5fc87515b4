"""Exception hierarchy shared by every module."""


class DistLayerError(Exception):
    """Base class for all library errors."""


class InvalidMatrix(DistLayerError, ValueError):
    pass


class InvalidDimension(DistLayerError, ValueError):
    pass


class ShapeError(DistLayerError, ValueError):
    pass


class NumericalFailure(DistLayerError, ArithmeticError):
    pass


class InvalidRotation(DistLayerError, ValueError):
    pass


class InvalidSubset(DistLayerError, ValueError):
    pass


class InvalidConfidence(DistLayerError, ValueError):
    pass


class InvalidDistance(DistLayerError, ValueError):
    pass


class UnderdeterminedGroup(DistLayerError, ValueError):
    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class UnsupportedActivation(DistLayerError, ValueError):
    pass


class InvalidK(DistLayerError, ValueError):
    pass


class InsufficientComponents(DistLayerError, ValueError):
    pass


class ZeroRowError(DistLayerError, ValueError):
    pass


class CacheError(DistLayerError, ValueError):
    pass


class NoTestableParameters(DistLayerError):
    """Every parameter fell inside a kink neighborhood during a gradient check."""


class DivergenceError(DistLayerError, ArithmeticError):
    def __init__(self, epoch, loss):
        super().__init__(f"loss diverged to {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss
