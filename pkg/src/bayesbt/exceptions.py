from __future__ import annotations


class DomainError(ValueError):
    """A numeric argument lies outside the domain of the model."""


class StructureError(ValueError):
    """Data or parameter shapes are inconsistent with each other."""


class DegenerateComparisonError(StructureError):
    """A choice comparison has an empty exclusive feature set."""


class ConfigurationError(ValueError):
    """A run configuration cannot be executed (e.g. an improper prior for sampling)."""


class DegenerateWarning(UserWarning):
    """Estimates were clamped at the floor or ceiling because the optimum lies on the boundary."""


class EvaluationError(ValueError):
    """Held-out data cannot be scored against the supplied fit."""


class DiagnosticError(ValueError):
    """A chain diagnostic is undefined for the given series."""


class UnseenPlayerWarning(UserWarning):
    """Held-out data mentions players absent from the fit; they were given the prior-mean skill."""
