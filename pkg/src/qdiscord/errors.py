"""Exception types raised by the library."""


class InvalidStateError(ValueError):
    """A matrix or coefficient triple does not describe a valid quantum state."""


class InvalidChannelError(ValueError):
    """Kraus operators or channel parameters are inconsistent."""


class UnsupportedParameterError(ValueError):
    """A closed form was requested outside its domain of validity."""


class ShortcutInvalidError(RuntimeError):
    """The decohered-mutual-information shortcut disagrees with the closed form.

    Raised when the caller's assertion that the channel preserves classical
    correlations turns out to be false for the given state and time.
    """


class QuadratureError(RuntimeError):
    """Numerical integration did not reach the requested tolerance.

    Attributes
    ----------
    estimate : float
        Best value obtained.
    error_bound : float
        Estimated absolute error of ``estimate``.
    """

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message} (estimate={estimate!r}, error_bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound
