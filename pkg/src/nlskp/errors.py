"""Exception types shared across the toolkit."""


class InputError(ValueError):
    """Invalid caller-supplied data: malformed files, bad grids, rejected pairs."""


class NumericError(RuntimeError):
    """A numeric procedure exhausted its budget or lost a guaranteed invariant."""


class ConsistencyError(RuntimeError):
    """Mutually inconsistent objects passed together (e.g. schedule vs envelopes)."""
