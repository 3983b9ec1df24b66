"""Exception types shared across the package."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the range where an operation is defined."""


class InsufficientData(ValueError):
    """Too few dyadic levels to form the requested statistic."""


class InconsistentMoments(RuntimeError):
    """An exactly computed variance came out non-positive."""


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Cholesky factorization hit a pivot at or below the relative tolerance.

    Attributes
    ----------
    pivot_index : int
        Zero-based row of the failing pivot.
    pivot_value : float
        The (updated) diagonal value at that row.
    """

    def __init__(self, pivot_index, pivot_value, threshold):
        self.pivot_index = int(pivot_index)
        self.pivot_value = float(pivot_value)
        self.threshold = float(threshold)
        super().__init__(
            f"pivot {self.pivot_index} = {self.pivot_value:.6g} "
            f"<= threshold {self.threshold:.6g}"
        )
