"""Exception hierarchy shared across the package.

Everything raised on purpose derives from HelmlabError so callers can
catch one base class. The CLI maps these onto process exit codes:
parse/validation problems exit 1, numeric failures exit 2, unachievable
design constraints exit 3.
"""

from __future__ import annotations


class HelmlabError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(HelmlabError):
    """Malformed input: bad JSON schema, bad CSV row, bad CLI color literal."""


class ValidationError(HelmlabError):
    """Structurally well-formed input that violates a documented invariant."""


class ConfigurationError(HelmlabError):
    """A required piece of configuration is missing, e.g. no neutral LUT."""


class NumericDomainError(HelmlabError):
    """A non-finite value appeared inside the pipeline.

    Carries the stage name so the failure can be located.
    """

    def __init__(self, stage: str, detail: str = ""):
        self.stage = stage
        msg = f"non-finite value in {stage}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ConvergenceError(HelmlabError):
    """Newton iteration failed to reach tolerance within the cap."""

    def __init__(self, stage: str, residual: float, iterations: int):
        self.stage = stage
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"{stage}: no convergence after {iterations} iterations, "
            f"max residual {residual:.3e}"
        )


class LutConstructionError(HelmlabError):
    """Neutral-correction LUT could not be built, e.g. non-monotone gray ramp."""


class DegenerateInputError(HelmlabError):
    """Input is degenerate for the requested statistic (all-zero distances, ...)."""


class ContrastError(HelmlabError):
    """Requested contrast ratio cannot be reached; carries the best achievable."""

    def __init__(self, requested: float, best_ratio: float):
        self.requested = requested
        self.best_ratio = best_ratio
        super().__init__(
            f"contrast ratio {requested:.2f} unachievable, "
            f"best achievable {best_ratio:.4f}"
        )


class FitError(HelmlabError):
    """Every optimizer restart failed."""
