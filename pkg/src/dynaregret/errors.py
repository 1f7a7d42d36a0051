"""Exception hierarchy shared by every dynaregret module."""

from __future__ import annotations


class DynaRegretError(Exception):
    """Base class for all library errors."""


class DimensionError(DynaRegretError, ValueError):
    """Vector or matrix dimensions do not agree."""


class CurvatureError(DynaRegretError, ValueError):
    """Curvature constants are invalid (e.g. alpha <= 0 or beta < alpha)."""


class UnsupportedCombinationError(DynaRegretError):
    """No closed-form constrained minimizer exists for this loss/set pair."""


class ScheduleExhaustedError(DynaRegretError):
    """A finite step-size sequence ran out before the horizon."""


class EmptyTraceError(DynaRegretError, ValueError):
    """A metric that needs at least one round received an empty trace."""


class GenerationError(DynaRegretError):
    """An environment spec cannot be realized (named constraint violated)."""


class PreconditionError(DynaRegretError, ValueError):
    """A checker received inputs outside the hypotheses of the inequality it checks."""


class DivergentBoundError(DynaRegretError, ValueError):
    """A bound divides by 1 - rho with rho = 1 and a nonzero numerator."""


class InvalidInputError(DynaRegretError, ValueError):
    """Inputs are internally inconsistent (e.g. x_next is not the update)."""


class ConfigError(DynaRegretError, ValueError):
    """Experiment configuration failed validation.

    ``field`` names the offending configuration key so the CLI can report it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
