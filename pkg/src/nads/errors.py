"""Exception hierarchy shared by every pipeline."""


class NadsError(Exception):
    """Base class for all toolkit errors."""


class DomainEscape(NadsError):
    """An orbit left the bounded analysis window of a real-line space."""

    def __init__(self, step, value, window):
        self.step = step
        self.value = value
        self.window = window
        super().__init__(
            f"orbit left analysis window {window} at step {step} (value {value!r})"
        )


class IndexUnresolvable(NadsError):
    """A schedule cannot name a map for the requested index."""


class UnderSpecifiedCheck(NadsError):
    """A check needs a horizon that was not supplied."""


class PreconditionError(NadsError, ValueError):
    """Inputs violate an operation's precondition."""


class NoModulusFound(NadsError):
    """No positive equicontinuity modulus was found at the grid floor."""


class ConvergenceNotObserved(NadsError):
    """Uniform convergence was not observed before the index cap."""


class ConfigError(NadsError):
    """A configuration or system-spec file is malformed."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
