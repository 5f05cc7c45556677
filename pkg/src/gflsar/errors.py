"""Exception types raised across the package."""


class OutOfBoundsError(ValueError):
    """A target or shape falls outside the scene extent."""


class FactorizationError(RuntimeError):
    """The cached system matrix could not be factorized."""


class DivergenceError(RuntimeError):
    """A non-finite value appeared during the iterations."""

    def __init__(self, message, iteration):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class SubapertureError(RuntimeError):
    """Wraps an error raised while processing one sub-aperture."""

    def __init__(self, index, cause):
        super().__init__(f"sub-aperture {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause
