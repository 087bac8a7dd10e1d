"""Score functions of densities and the characterizations built on them.

The location score of a density p is phi_p = (log p)'; the scale score
is psi_p = 1 + x * phi_p.  The standard normal is the unique density
with phi(x) = -x, and this package makes the classical consequences of
that fact computable for arbitrary densities: score-equation MLE
checks, Stein operators and discrepancies, variance bounds, and the
Fisher-information singularities of skew-symmetric families.
"""

from .density import (
    Density,
    ScoreEvaluation,
    SupportInterval,
    density_from_expression,
    location_score,
    make_builtin,
    power_density,
    sample,
    scale_score,
)
from .errors import NumericalError, ScorekitError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "Density",
    "ScoreEvaluation",
    "SupportInterval",
    "density_from_expression",
    "location_score",
    "make_builtin",
    "power_density",
    "sample",
    "scale_score",
    "ScorekitError",
    "ValidationError",
    "NumericalError",
    "__version__",
]
