"""Exception types raised across the package."""


class QActivateError(ValueError):
    """Base class for invalid-input errors."""


class NotHermitian(QActivateError):
    pass


class NotPSD(QActivateError):
    pass


class TraceNotOne(QActivateError):
    pass


class NotNormalized(QActivateError):
    pass


class NotUnitary(QActivateError):
    pass


class DimMismatch(QActivateError):
    pass


class BadSubsystemIndex(QActivateError):
    pass


class BadCut(QActivateError):
    pass


class BadDimension(QActivateError):
    pass


class NonUniformDims(QActivateError):
    pass


class LengthMismatch(QActivateError):
    pass


class NotTwoQubits(QActivateError):
    pass


class NotClassical(QActivateError):
    pass


class StateFormatError(QActivateError):
    """Malformed JSON state document (schema-level problem)."""


class OptimizerBudgetExhausted(RuntimeError):
    """Raised by ``minimize(..., strict=True)`` when no restart converged.

    The best point found so far is kept on ``self.result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
