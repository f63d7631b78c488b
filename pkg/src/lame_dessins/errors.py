"""Exception hierarchy shared by all modules."""


class LameDessinsError(Exception):
    """Base class for every error raised by this package."""


class NonConvergence(LameDessinsError):
    pass


class InsufficientPrecision(LameDessinsError):
    pass


class NotApplicable(LameDessinsError):
    pass


class ShapeError(LameDessinsError):
    pass


class Incomplete(LameDessinsError):
    """Raised by :func:`lame_dessins.belyi.solve_all` when the census is not matched.

    The partial result is kept on the exception so callers can still report it.
    """

    def __init__(self, message, solutions=(), missing=(), diagnostics=None):
        super().__init__(message)
        self.solutions = list(solutions)
        self.missing = list(missing)
        self.diagnostics = diagnostics or {}


class DecodeAmbiguous(LameDessinsError):
    pass


class VerificationFailed(LameDessinsError):
    def __init__(self, check, message=""):
        super().__init__(f"{check}: {message}" if message else check)
        self.check = check


class DegenerateBranchLocus(LameDessinsError):
    pass


class SingularCurve(LameDessinsError):
    pass


class RecognitionFailed(LameDessinsError):
    pass


class TorsionUncertain(LameDessinsError):
    pass


class FieldTooLarge(LameDessinsError):
    pass


class MultiplePrimesAbove(LameDessinsError):
    pass


class AGMFailure(LameDessinsError):
    pass


class PoleProximity(LameDessinsError):
    pass


class StepSizeUnderflow(LameDessinsError):
    pass


class GroupBlowup(LameDessinsError):
    pass


class OrderMismatch(LameDessinsError):
    pass
