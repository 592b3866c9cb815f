"""Exception and warning types shared by all builders."""


class FieldMismatchError(ValueError):
    """Raised when real and complex objects are mixed."""


class ShapeError(ValueError):
    """Raised when array shapes or dimensions do not chain."""


class ConstructionError(ValueError):
    """A builder precondition does not hold (bad degree, zero coefficient, ...)."""


class CancellationWarning(RuntimeWarning):
    """Difference-quotient parameters are in the catastrophic-cancellation regime."""
