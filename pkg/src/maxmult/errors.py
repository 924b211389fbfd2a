"""Exception and warning types shared across the package."""


class MaxMultError(Exception):
    """Base class for all package errors."""


class PartialOverlap(MaxMultError):
    """A bump term only partially covers a modulated term's spectrum.

    The exact calculus cannot represent the product; callers are expected
    to fall back to the grid engine.
    """

    def __init__(self, scale: int, k: int, freq: int):
        self.scale, self.k, self.freq = scale, k, freq
        super().__init__(f"partial overlap: scale={scale}, k={k}, freq={freq}")


class OutOfWindow(MaxMultError):
    """Point lies outside the cached envelope window."""


class SpecMismatch(MaxMultError):
    """Grid objects defined on different grids were combined."""


class EmptyDilationSet(MaxMultError):
    """A maximal operator was asked for a supremum over no dilations."""


class CapacityExceeded(MaxMultError):
    """A construction exceeds the configured size bound."""


class InfeasibleSlot(MaxMultError):
    """Every candidate center in a tiling slot is forbidden.

    The counting bound rules this out, so it indicates a bug.
    """


class WindowTooWide(MaxMultError):
    """Coverage window reaches into the unconstructed edge region."""


class InvalidWeight(MaxMultError):
    """Growth weight is not positive, nondecreasing and nonconstant."""


class AliasWarning(UserWarning):
    """Kernel mass near the period boundary; periodization may bias results."""
