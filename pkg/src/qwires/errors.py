"""Exception hierarchy shared by every qwires module."""


class QwiresError(Exception):
    """Base class for all library errors."""


class NotUnitary(QwiresError):
    pass


class NotNormalized(QwiresError):
    pass


class NoGap(QwiresError):
    """Transfer channel has more than one eigenvalue on the unit circle."""


NotGapped = NoGap


class NotUnital(QwiresError):
    """Transfer channel does not map the identity to itself."""


class Degenerate(QwiresError):
    """By-product angle is (numerically) zero."""


class ChoiRankExceeded(QwiresError):
    pass


class NotReached(QwiresError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class InfiniteGroup(QwiresError):
    pass


class ConstraintViolated(QwiresError):
    pass


class NotClusterWire(QwiresError):
    pass


class TooLarge(QwiresError):
    pass


class ZeroProbabilityBranch(QwiresError):
    pass


class CutoffLeak(QwiresError):
    def __init__(self, message, weight=0.0):
        super().__init__(message)
        self.weight = weight
