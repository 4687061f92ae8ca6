"""
Error hierarchy. Each class carries the CLI exit code it maps to.
"""


class NlcfError(Exception):
    """Base class for all package errors."""

    exit_code = 3

    def __init__(self, message: str, **context: object) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict[str, object]:
        """Structured form for logs and summary.json."""
        return {"error": type(self).__name__, "message": self.message, **self.context}


class ConfigurationError(NlcfError):
    """Invalid parameters, unknown keys or malformed input."""

    exit_code = 2


class KernelError(ConfigurationError):
    """Kernel parameters outside the admissible range or a non-integrable profile."""


class ShapeError(ConfigurationError):
    """Shape parameters outside the admissible range."""


class DivergenceError(NlcfError):
    """An improper integral was detected to diverge."""

    def __init__(self, message: str, where: str, **context: object) -> None:
        super().__init__(message, where=where, **context)
        self.where = where


class WeakRegimeError(DivergenceError):
    """The KERSI integral diverges, so Λ and r(t) do not exist."""


class CurvatureError(NlcfError):
    """Curvature requested at a point where it is not evaluated."""


class NumericalAbort(NlcfError):
    """The numerical scheme cannot continue (CFL, band at edge, nesting violation)."""

    exit_code = 3
