"""
Domain exceptions shared by all services
"""

from typing import Any, Dict, Optional


class PMCMError(Exception):
    """Base class for every error raised by the laboratory"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "diagnostics": self.diagnostics,
        }


class InvalidInputError(PMCMError, ValueError):
    """A value violates a type invariant (radii order, jump convention, ...)"""


class DomainError(PMCMError, ValueError):
    """An integrand or formula is evaluated outside its domain"""


class InfeasibleError(PMCMError):
    """No admissible radial structure exists for the requested data"""

    def __init__(
        self,
        message: str,
        diagnostics: Optional[Dict[str, Any]] = None,
        jump_hint: Optional[str] = None,
    ):
        super().__init__(message, diagnostics)
        self.jump_hint = jump_hint
        if jump_hint:
            self.diagnostics["jump_hint"] = jump_hint


class PreconditionError(PMCMError):
    """An operation refused because one of its hypotheses does not hold"""

    def __init__(self, message: str, hypothesis: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message, diagnostics)
        self.hypothesis = hypothesis
        self.diagnostics["hypothesis"] = hypothesis


class NonCoerciveError(PMCMError):
    """The measure is not certified non-extremal (L_hat >= 1)"""

    def __init__(
        self,
        message: str,
        l_hat: float,
        delta: Optional[float] = None,
        diagnostics: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, diagnostics)
        self.l_hat = l_hat
        self.delta = delta
        self.diagnostics["L_hat"] = l_hat
        if delta is not None:
            self.diagnostics["delta"] = delta


class ConfigurationError(PMCMError):
    """Carrier, problem or scenario is internally inconsistent"""


class DivergenceError(PMCMError):
    """The iterative solver left its energy envelope"""
