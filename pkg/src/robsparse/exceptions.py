class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""


class DegenerateDataError(ValueError):
    """The data leave the requested quantity undefined (zero spread, all-zero weights...)."""
