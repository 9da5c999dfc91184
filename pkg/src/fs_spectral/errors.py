"""Exception hierarchy shared by all fs_spectral modules."""


class FsError(Exception):
    """Base class for every numeric or contract failure raised by the library."""


class EmptySequence(FsError, ValueError):
    pass


class IndexOutOfRange(FsError, IndexError):
    pass


class ModeMismatch(FsError, ValueError):
    pass


class LengthMismatch(FsError, ValueError):
    pass


class NoInteriorMinimum(FsError):
    """The derivative of a scalar term keeps one sign, so no critical point exists."""


class BracketExpansionExceeded(FsError):
    pass


class ToleranceNotReached(FsError):
    pass


class EnvelopeTooSlow(FsError):
    pass


class ModeSolveFailed(FsError):
    def __init__(self, mode, cause):
        super().__init__(f"mode {mode}: {cause}")
        self.mode = mode
        self.cause = cause


class CertificationFailed(FsError):
    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class QuadratureNotConverged(FsError):
    pass


class PointOutOfDomain(FsError, ValueError):
    pass


class DataNotRapidlyDecreasing(FsError, ValueError):
    pass


class ArctanBoundViolated(FsError, ValueError):
    pass
