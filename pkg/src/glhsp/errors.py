"""Shared exception types."""


class CtxMismatch(ValueError):
    """Operands belong to different field contexts."""


class ShapeMismatch(ValueError):
    """Matrix shapes are incompatible for the requested operation."""


class AmbientMismatch(ValueError):
    """Subspaces live in different ambient spaces."""


class Singular(ValueError):
    """Inverse of a rank-deficient matrix was requested."""


class BudgetExceeded(RuntimeError):
    """An enumeration or dense-state operation would exceed the configured budget."""


class EmptySet(ValueError):
    """A uniform superposition over the empty set was requested."""


class ZeroMass(RuntimeError):
    """Post-selection would leave a state with no probability mass."""


class UnsupportedFamily(ValueError):
    """No coset labelling rule is known for the requested subgroup family."""


class RepetitionBudgetExceeded(RuntimeError):
    """A probabilistic stage used up its repetition budget without succeeding."""


class InvalidConfig(ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
