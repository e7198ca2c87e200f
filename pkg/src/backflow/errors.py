"""Shared exception types."""


class SingularTimeError(ValueError):
    """Closed-form current requested exactly at a singular time (t = +-1)."""


class AccuracyError(RuntimeError):
    """A numerical routine could not reach the requested tolerance.

    The best available estimate is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
