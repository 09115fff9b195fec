"""Exception types shared across the package.

Every search or evaluation routine raises one of these instead of returning
sentinel values, so the CLI can map failures onto stable exit codes.
"""


class DomainError(ValueError):
    """An argument violates a documented precondition."""


class ParseError(ValueError):
    """A file or string does not match the expected format."""


class NotFoundError(LookupError):
    """A search completed without finding the requested object."""


class BudgetExceededError(RuntimeError):
    """A computation would exceed a configured size or node budget."""
