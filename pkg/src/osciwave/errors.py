"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: configuration problems exit with 2,
violated hypotheses with 3 and numerical failures with 4.
"""

from __future__ import annotations


class OsciwaveError(Exception):
    """Base class for every error raised by the package."""


class ContractViolation(OsciwaveError, ValueError):
    """A precondition on the arguments of an operation does not hold."""


class DomainError(ContractViolation):
    """An argument lies outside the domain of the mathematical operation."""


class SmoothnessExceeded(ContractViolation):
    """A derivative order above the available smoothness was requested."""


class ConfigError(OsciwaveError):
    """A scenario configuration is malformed or inconsistent."""


class HypothesisViolated(OsciwaveError):
    """A structural hypothesis on the damping coefficient fails."""


class NumericalFailure(OsciwaveError):
    """A numerical method could not deliver a trustworthy result."""


class StiffnessError(NumericalFailure):
    """The adaptive step size fell below the admissible minimum."""


class BlowupError(NumericalFailure):
    """The integrated state became non-finite."""


class SeriesDivergence(NumericalFailure):
    """A fixed-point or series iteration did not converge."""


class HierarchyBreakdown(NumericalFailure):
    """The off-diagonal part is not dominated by the imaginary diagonal part."""
