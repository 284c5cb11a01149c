"""Exception types shared across the package.

Two families matter to callers: `InputError` for anything the user got
wrong (documents, flags, dimensions, literals), and `DiagnosticError`
for computations whose numerics came out inconsistent or failed to
converge.  The command line maps the first family to exit code 1 and
the second to exit code 2.
"""


class FlowClassError(Exception):
    """Base class for every error raised by this package."""


class InputError(FlowClassError):
    """Malformed input: bad document, bad literal, bad dimensions, bad flag."""


class DiagnosticError(FlowClassError):
    """A computation produced inconsistent or non-convergent numerics."""


class NonConvergenceError(DiagnosticError):
    """An iterative solver hit its iteration cap without converging."""


class ExactModeError(DiagnosticError):
    """Exact arithmetic cannot represent the requested result.

    Remedies: rerun in float mode, or supply spectrum blocks directly.
    """


class InconsistentInvariantsError(DiagnosticError):
    """Measured invariants contradict each other, usually a tolerance artifact."""
