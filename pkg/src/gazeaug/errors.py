"""Exception hierarchy shared across the package.

Every error raised by library code derives from GazeAugError so callers
(and the CLI exit-code mapping) can distinguish data problems from
numerical failures.
"""


class GazeAugError(Exception):
    """Base class for all package errors."""


class SchemaMismatch(GazeAugError):
    """CSV header or row-table schema does not match the expected one."""


class NonFiniteValue(GazeAugError):
    """A NaN or infinite value was found where finite data is required."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownTask(GazeAugError):
    """Task label outside 1..4."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class EmptyGroup(GazeAugError):
    """A (participant, image, task) group contained no fixations."""


class TooFewSamples(GazeAugError):
    """Not enough samples per task to honour the requested split."""


class InsufficientData(GazeAugError):
    """Fewer samples than mixture components."""


class InsufficientRows(GazeAugError):
    """A task's synthetic row pool cannot cover the requested fixations."""


class InvalidConfig(GazeAugError):
    """Configuration value outside its documented domain."""


class DomainError(GazeAugError):
    """Function argument outside the mathematical domain."""


class NotPositiveDefinite(GazeAugError):
    """Cholesky pivot <= 0; the input matrix is not positive definite."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class NumericalDivergence(GazeAugError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class EmptySample(GazeAugError):
    """A statistic was requested on an empty sample."""


class ShapeMismatch(GazeAugError):
    """Array shape incompatible with the fitted model or layer."""


# Alias used by the tree decoders' contracts.
FeatureWidthMismatch = ShapeMismatch


class DegenerateColumnWarning(UserWarning):
    """A continuous column is constant; it is modelled as a constant."""
