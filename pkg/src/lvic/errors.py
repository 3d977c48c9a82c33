"""Exception types raised across the package."""

from __future__ import annotations


class LvicError(Exception):
    """Base class for all package errors."""


class InvalidInputError(LvicError, ValueError):
    pass


class DomainError(LvicError, ValueError):
    """A parameter lies outside the domain where a density is defined."""


class UnsupportedFamilyError(LvicError, TypeError):
    pass


class ParseError(LvicError, ValueError):
    """Malformed CSV or config file.  ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = [str(path)] if path is not None else []
        if line is not None:
            where.append(f"line {line}")
        super().__init__(": ".join(where + [message]))
        self.line = line
        self.path = path


class DegenerateGridError(LvicError, ValueError):
    """Posterior SD of a latent variable is zero, so no adapted grid exists."""

    def __init__(self, clusters):
        self.clusters = list(clusters)
        super().__init__(
            f"zero posterior SD for latent variable(s) of cluster(s) {self.clusters[:10]}; "
            "use the prior-scale grid (mean 0, SD = posterior mean of tau) for these clusters"
        )


class ConvergenceError(LvicError, RuntimeError):
    """R-hat gate not met within the iteration budget.

    Carries the partial draws and the R-hat report so callers can still
    write them out.
    """

    def __init__(self, message: str, draws=None, rhat=None):
        super().__init__(message)
        self.draws = draws
        self.rhat = rhat


class QuadratureConvergenceError(LvicError, RuntimeError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class MissingLatentError(LvicError, ValueError):
    pass


class InvalidComparisonError(LvicError, ValueError):
    pass


class NonFiniteError(LvicError, ValueError):
    pass
