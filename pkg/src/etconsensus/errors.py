"""Exception hierarchy shared by all modules."""


class EtcError(Exception):
    """Base class for errors raised by this package."""


# graph
class GraphError(EtcError, ValueError):
    pass


class NonSymmetricError(GraphError):
    pass


class NegativeWeightError(GraphError):
    pass


class NonzeroDiagonalError(GraphError):
    pass


# plant / faults
class NonFiniteDerivativeError(EtcError, ArithmeticError):
    pass


class FaultFactorOutOfRangeError(EtcError, ValueError):
    pass


class UnknownPlantError(EtcError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown plant"


# rbf / controller
class DimensionMismatchError(EtcError, ValueError):
    pass


class NonPositiveGainError(EtcError, ValueError):
    pass


class StepTooLargeError(EtcError, ValueError):
    pass


class ControllerDivergedError(EtcError, ArithmeticError):
    pass


# trigger
class TimeRegressionError(EtcError, ValueError):
    pass


class ZeroRateBoundError(EtcError, ValueError):
    pass


# engine
class DivergedError(EtcError, ArithmeticError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NonFiniteError(DivergedError):
    pass


# config
class SchemaError(EtcError, ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(SchemaError):
    pass
