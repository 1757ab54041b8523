"""Exception types shared across the library.

Every failure mode that callers are expected to catch gets its own class;
they all derive from :class:`HardyLabError` so scripts can use one except
clause when they only care about "the computation did not certify".
"""


class HardyLabError(Exception):
    """Base class for all library-specific failures."""


class DomainError(HardyLabError, ValueError):
    """Parameters outside the mathematical domain of a formula."""


class QuadratureError(HardyLabError):
    """A numerical integral failed its accuracy target."""


class StepUnderflow(HardyLabError):
    """Adaptive ODE step collapsed below the machine-relative floor."""


class BlowUpBackward(HardyLabError):
    """Backward integration left the admissible strip [0, cap]."""


class NoContraction(HardyLabError):
    """Fixed-point iteration failed to contract; shrink the window."""


class DivergentEnergy(HardyLabError):
    """A weighted energy integral failed to Cauchy-converge under refinement."""


class NoBlowUp(HardyLabError):
    """The shooting solution never reached the blow-up cap."""


class DominationViolated(HardyLabError):
    """A claimed global solution exceeded the comparison envelope."""

    def __init__(self, radius, message=None):
        self.radius = radius
        super().__init__(message or f"domination fails at radius {radius!r}")


class DegenerateWindow(HardyLabError):
    """Fit window holds too few nodes for a regression."""


class AmbiguousRegime(HardyLabError):
    """Parameters sit on a regime boundary and the caller must disambiguate."""


class NonIntegrableTail(HardyLabError):
    """A volume term diverged under grid-refinement extrapolation."""


class NoDescent(HardyLabError):
    """Line search stalled above tolerance before convergence."""


class InsufficientPoints(HardyLabError):
    """Not enough family members for the requested trend analysis."""
