class GTNARError(Exception):
    """Base class for model and estimation failures."""


class UnstableParametersError(GTNARError, ValueError):
    pass


class EmptyGroupError(GTNARError):
    def __init__(self, mode, group):
        self.mode = mode
        self.group = group
        super().__init__(f"group {group + 1} of mode {mode + 1} has no members")


class SingularSystemError(GTNARError):
    def __init__(self, block, rcond):
        self.block = block
        self.rcond = rcond
        super().__init__(
            f"normal system is numerically singular (rcond={rcond:.3g}); "
            f"weakest direction loads on {block}"
        )
