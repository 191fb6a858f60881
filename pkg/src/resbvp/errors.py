"""Exception hierarchy.

Input-shaped failures (bad files, bad expressions, bad parameters) derive
from :class:`InputError`; failures of the numerics themselves (resonance
structure absent, iterations stalling, sign facts violated) derive from
:class:`NumericalError`.  The CLI maps the former to exit code 2 and the
latter to exit code 3.
"""


class ResbvpError(Exception):
    """Base class for all library errors."""


class InputError(ResbvpError):
    """Malformed user input: files, expressions, parameter combinations."""


class ProblemFormatError(InputError):
    """A problem document violates the JSON schema or its invariants."""


class ExprSyntaxError(InputError):
    """Expression text failed to parse.

    Attributes:
        position: byte offset of the offending token.
        expected: human-readable description of what was expected there.
    """

    def __init__(self, message, position, expected=None):
        super().__init__(f"{message} at offset {position}")
        self.position = position
        self.expected = expected or []


class NumericalError(ResbvpError):
    """A computation could not be completed or a numeric contract failed."""


class ExprDomainError(NumericalError):
    """Evaluation hit a domain error (log/sqrt/division/power).

    Carries the offending subexpression as text.
    """

    def __init__(self, message, subexpression):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


class NotResonantError(NumericalError):
    """The homogeneous linear problem has only the trivial solution."""


class KernelTooLargeError(NumericalError):
    """The homogeneous solution space has dimension greater than one."""


class SingularStepMatrixError(NumericalError):
    """Some one-step companion matrix is numerically singular."""


class NotInImageError(NumericalError):
    """right_inverse was applied to a function outside the operator image."""


class DegenerateSignDataError(NumericalError):
    """All sign-classified indices vanished; certification constants undefined."""


class NotApplicableError(NumericalError):
    """A certification route's precondition fails for this problem."""


class NoConvergenceError(NumericalError):
    """An iteration hit its cap without meeting the tolerance."""

    def __init__(self, message, defect=None, iterations=None):
        super().__init__(message)
        self.defect = defect
        self.iterations = iterations


class BoundarySignViolationError(NumericalError):
    """Bifurcation values at the bracket endpoints contradict the certificate."""

    def __init__(self, value_lo, value_hi):
        super().__init__(
            "endpoint bifurcation values contradict the certificate: "
            f"B(-alpha*)={value_lo!r}, B(+alpha*)={value_hi!r}"
        )
        self.value_lo = value_lo
        self.value_hi = value_hi


class BisectionStallError(NumericalError):
    """The bracket collapsed without the bifurcation value meeting tolerance."""
