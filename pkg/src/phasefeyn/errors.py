"""Exception types raised by phasefeyn."""


class PhaseFeynError(ValueError):
    """Base class; a violated precondition of some operation."""


class GridMismatchError(PhaseFeynError):
    pass


class IllConditionedError(PhaseFeynError):
    """Raised when an operator cannot be inverted reliably.

    The ``condition`` attribute carries the 1-norm condition estimate.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class VanishingDeterminantError(PhaseFeynError):
    pass


class GramConditionError(PhaseFeynError):
    """The pinning Gram matrix violates the integrability assumption."""


class GaussianPreconditionError(PhaseFeynError):
    pass
