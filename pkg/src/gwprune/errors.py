"""Shared exception types."""


class CapacityError(RuntimeError):
    """A tree operation would exceed the configured node-count cap."""


class NumericalError(RuntimeError):
    """An iteration or evaluation lost the precision it needs to continue."""


class TruncationError(RuntimeError):
    """A truncated series cannot certify the requested accuracy."""


class StructuralError(RuntimeError):
    """Input violates the structural hypotheses of the requested operation."""


class ConditioningError(RuntimeError):
    """Rejection sampling could not satisfy the conditioning within budget."""
