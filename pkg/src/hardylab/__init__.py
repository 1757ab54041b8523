"""Numerical laboratory for the Hardy-potential two-power equation.

Radial solvers, singularity classification, flux/virial identity checks,
weighted Green functions, constrained variational minimization, and
vanishing-absorption blow-up asymptotics for

    -Delta u - mu u / |x|^2 = u^p - eps u^q   on balls in R^N.

Everything is deterministic: fixed grids, closed-form seeds, no wall-clock
or platform-dependent state.
"""

from .constants import (DerivedExponents, ProblemParams, derive, omega_n,
                        sobolev_constant, talenti_profile)
from .errors import DomainError, HardyLabError

__version__ = "0.1.0"

__all__ = [
    "DerivedExponents",
    "DomainError",
    "HardyLabError",
    "ProblemParams",
    "__version__",
    "derive",
    "omega_n",
    "sobolev_constant",
    "talenti_profile",
]
