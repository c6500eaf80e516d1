"""Exception types raised by photonloc."""


class PhotonlocError(Exception):
    pass


class ConfigError(PhotonlocError, ValueError):
    """Invalid experiment configuration (CLI exit status 2)."""


class NumericalGuardError(PhotonlocError, ArithmeticError):
    """A numerical safeguard tripped (CLI exit status 3)."""


class ResonanceError(NumericalGuardError):
    """Energy inside the excluded window around the atomic frequency."""


class SingularSolveError(NumericalGuardError):
    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class EigensolverError(NumericalGuardError):
    pass


class BoxSizeError(PhotonlocError, ValueError):
    pass


class BudgetError(PhotonlocError, ValueError):
    """Requested dense matrix exceeds the configured dimension budget."""
