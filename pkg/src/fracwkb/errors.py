"""Exception hierarchy.

Validation problems derive from :class:`ValueError`, numerical failures from
:class:`RuntimeError`; the CLI maps the two families to distinct exit codes.
"""


class FracWkbError(Exception):
    """Base class for all package errors."""


class DomainError(FracWkbError, ValueError):
    """A parameter lies outside the admissible range."""


class ContractError(FracWkbError, ValueError):
    """Inputs violate an operation's preconditions (wrong grid kind, mismatch)."""


class ResolutionError(ContractError):
    """The grid cannot resolve the requested carrier frequency."""


class NumericalError(FracWkbError, RuntimeError):
    """A computation failed to converge or produced non-finite values."""


class QuadratureError(NumericalError):
    """Quadrature estimate failed its internal consistency check."""


class DivergenceError(NumericalError):
    """A defining integral does not converge for the requested parameters."""
