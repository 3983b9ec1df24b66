"""Closed-form covariance kernels for bifractional, fractional and
sub-fractional Brownian motion.

All kernels accept scalars or broadcastable arrays of times ``s, t >= 0``.
Times above 1 are allowed: the dyadic moment identities evaluate the kernel
at integer points.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

KERNEL_KINDS = ("bifractional", "fractional", "subfractional")


@dataclass(frozen=True)
class ProcessParams:
    """Parameters ``(alpha, beta)`` of a bifractional Brownian motion.

    ``kernel_kind`` selects the covariance. ``fractional`` is the ``beta = 1``
    specialization and ``subfractional`` uses ``alpha`` alone; both require
    ``beta == 1``.
    """

    alpha: float
    beta: float = 1.0
    kernel_kind: str = "bifractional"

    def __post_init__(self):
        if self.kernel_kind not in KERNEL_KINDS:
            raise DomainError(f"unknown kernel_kind {self.kernel_kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if self.kernel_kind != "bifractional" and self.beta != 1.0:
            raise DomainError(f"kernel_kind={self.kernel_kind} requires beta = 1")

    @property
    def hurst(self):
        """Self-similarity index: ``alpha * beta`` (``alpha`` for sub-fBm)."""
        if self.kernel_kind == "subfractional":
            return self.alpha
        return self.alpha * self.beta

    def cov(self, s, t):
        return covariance(self, s, t)

    def as_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "kernel_kind": self.kernel_kind}


def _times(s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("times must be non-negative")
    return s, t


def _finish(value, s, t, diagonal):
    # exact values at the degenerate points s = 0, t = 0, s = t
    value = np.where(s == t, diagonal, value)
    value = np.where((s == 0) | (t == 0), 0.0, value)
    return value[()] if value.ndim == 0 else value


def bbm_cov(params, s, t):
    """R(s, t) = 2^-b ((t^2a + s^2a)^b - |t - s|^2ab)."""
    s, t = _times(s, t)
    a, b = params.alpha, params.beta
    h2 = 2.0 * a * b
    with np.errstate(divide="ignore"):
        value = ((t ** (2 * a) + s ** (2 * a)) ** b - np.abs(t - s) ** h2) / 2.0**b
    return _finish(value, s, t, t**h2)


def fbm_cov(hurst, s, t):
    """Fractional Brownian motion covariance ½(t^2H + s^2H - |t-s|^2H)."""
    s, t = _times(s, t)
    h2 = 2.0 * hurst
    value = 0.5 * (t**h2 + s**h2 - np.abs(t - s) ** h2)
    return _finish(value, s, t, t**h2)


def subfbm_cov(alpha, s, t):
    """Sub-fractional Brownian motion covariance
    s^2a + t^2a - ½((s+t)^2a + |t-s|^2a)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    s, t = _times(s, t)
    h2 = 2.0 * alpha
    value = s**h2 + t**h2 - 0.5 * ((s + t) ** h2 + np.abs(t - s) ** h2)
    return _finish(value, s, t, (2.0 - 2.0 ** (h2 - 1.0)) * t**h2)


def covariance(params, s, t):
    """Dispatch on ``params.kernel_kind``."""
    if params.kernel_kind == "bifractional":
        return bbm_cov(params, s, t)
    if params.kernel_kind == "fractional":
        return fbm_cov(params.alpha, s, t)
    return subfbm_cov(params.alpha, s, t)


def increment_variance(params, s, t):
    """E(B(t) - B(s))^2 = R(t,t) + R(s,s) - 2R(s,t).

    For the bifractional kernel this is sandwiched between
    ``2^-b |t-s|^2ab`` and ``2^(1-b) |t-s|^2ab``.
    """
    value = covariance(params, t, t) + covariance(params, s, s) - 2.0 * covariance(params, s, t)
    s, t = np.asarray(s, float), np.asarray(t, float)
    value = np.where(s == t, 0.0, value)
    return value[()] if np.ndim(value) == 0 else value


def quasi_helix_bounds(params, s, t):
    """Lower and upper increment-variance bounds for the bifractional kernel."""
    d = np.abs(np.asarray(t, float) - np.asarray(s, float)) ** (2.0 * params.alpha * params.beta)
    return 2.0 ** (-params.beta) * d, 2.0 ** (1.0 - params.beta) * d


def self_similarity_check(params, a, s, t):
    """Return ``(R(as, at), a^(2H) R(s, t))``; equal for a self-similar kernel."""
    if a <= 0:
        raise DomainError(f"scale must be positive, got {a}")
    lhs = covariance(params, a * np.asarray(s, float), a * np.asarray(t, float))
    rhs = a ** (2.0 * params.hurst) * covariance(params, s, t)
    return lhs, rhs
