"""Exception types separating configuration errors from numerical failures."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (eigensolver, truncation control, ...)."""
