"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad user input: malformed file, unknown identifier, invalid parameters.

    CLI maps this to exit status 1.
    """


class InternalError(AssertionError):
    """A structural guarantee was violated; indicates a bug, not bad input.

    CLI maps this to exit status 2.
    """


class StageError(RuntimeError):
    """Failure inside a named pipeline stage; wraps the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause
