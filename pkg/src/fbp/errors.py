"""Exception types raised by the solver."""


class FBPError(Exception):
    """Base class for solver errors."""


class DomainError(FBPError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SingularStepError(FBPError, ArithmeticError):
    """The implicit diagonal solve of a Volterra march is ill-conditioned."""


class CurveClassError(FBPError, ValueError):
    """A boundary curve violates its Lipschitz budget."""


class BudgetError(FBPError):
    """The image K[L] left the admissible Lipschitz class.

    Attributes
    ----------
    seminorm : float
        Measured Lipschitz seminorm of the offending curve.
    budget : float
        The budget it was checked against.
    """

    def __init__(self, seminorm, budget):
        super().__init__(
            f"Lipschitz seminorm {seminorm:.6g} exceeds budget A={budget:.6g}; "
            "the horizon is probably too long"
        )
        self.seminorm = seminorm
        self.budget = budget


class ConvergenceError(FBPError):
    """An iteration stopped before reaching its tolerance."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)
