"""Exception types shared across the package."""


class UsageError(ValueError):
    """A caller violated an operation's contract (bad arguments or state)."""


class BlowupDetected(RuntimeError):
    """The integrator produced non-finite values or crossed the norm ceiling.

    Carries the last time at which the state was still finite.
    """

    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class CorruptSnapshotError(RuntimeError):
    """A snapshot file failed structural or checksum validation."""
