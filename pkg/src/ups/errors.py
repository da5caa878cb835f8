class UpsError(Exception):
    """Base class for library errors."""


class ConfigError(UpsError, ValueError):
    pass


class NumericError(UpsError, ArithmeticError):
    """Numerical failure: the CLI maps these to exit code 2."""


class NumericDomainError(NumericError):
    pass


class ConvergenceError(NumericError):
    pass


class DegenerateProposalError(NumericError, ValueError):
    pass


class NoMeetingError(NumericError):
    """Coupled chains did not meet within the iteration cap.

    ``partial`` holds whatever was recorded before giving up and
    ``context`` carries caller-supplied details (grid point, lambda, ...).
    """

    def __init__(self, message, partial=None, context=None):
        super().__init__(message)
        self.partial = partial
        self.context = dict(context or {})

    def with_context(self, **kw):
        return NoMeetingError(self.args[0], self.partial, {**self.context, **kw})

    def __str__(self):
        base = super().__str__()
        if self.context:
            extra = ", ".join(f"{k}={v}" for k, v in self.context.items())
            return f"{base} ({extra})"
        return base
