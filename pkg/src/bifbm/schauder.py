"""Faber-Schauder coefficients on dyadic grids and the Besov, little-Besov
and Hölder norms built from them.

A function sampled on the level-``J`` grid ``i / 2^J`` has coefficients

    f_0 = f(0),  f_1 = f(1) - f(0),
    f_jk = 2 * 2^(j/2) * (f(m) - f(l)/2 - f(r)/2),

where ``l, m, r`` are ``(2k-2, 2k-1, 2k) / 2^(j+1)``, for ``j < J`` and
``k = 1 .. 2^j``. Leading axes of the input are treated as a batch of paths.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientData

SLOPE_THRESHOLD = 0.02


@dataclass
class SchauderCoeffs:
    """``levels[j]`` has shape ``(..., 2^j)``; ``f0``/``f1`` carry the batch shape."""

    f0: np.ndarray
    f1: np.ndarray
    levels: list

    @property
    def depth(self):
        return len(self.levels)

    def __post_init__(self):
        for j, row in enumerate(self.levels):
            if np.shape(row)[-1] != 2**j:
                raise DomainError(f"level {j} has {np.shape(row)[-1]} entries, expected {2**j}")

    def flat(self):
        """Concatenate ``f0, f1`` and all levels along the last axis."""
        parts = [np.asarray(self.f0)[..., None], np.asarray(self.f1)[..., None]]
        return np.concatenate(parts + [np.asarray(r) for r in self.levels], axis=-1)

    def __getitem__(self, idx):
        # select paths out of a batch
        return SchauderCoeffs(
            np.asarray(self.f0)[idx], np.asarray(self.f1)[idx], [r[idx] for r in self.levels]
        )


@dataclass
class BesovReport:
    gamma: float
    p: float
    level_terms: np.ndarray
    seq_norm: np.ndarray
    slope: np.ndarray = field(default=None)

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "p": self.p,
            "level_terms": np.asarray(self.level_terms).tolist(),
            "seq_norm": np.asarray(self.seq_norm).tolist(),
            "slope": None if self.slope is None else np.asarray(self.slope).tolist(),
        }


@dataclass
class BesCriterion:
    """Finite-level surrogate for ``T_j -> 0``.

    ``verdict`` is ``"member"`` when the log2-slope is below ``-0.02``,
    ``"growing"`` above ``+0.02`` and ``"flat"`` otherwise.
    """

    level_terms: np.ndarray
    slope: float
    verdict: str

    @property
    def in_bes(self):
        return self.verdict == "member"


def grid_level(n_points):
    J = int(round(np.log2(n_points - 1))) if n_points > 1 else 0
    if J < 1 or 2**J + 1 != n_points:
        raise DomainError(f"expected 2^J + 1 grid values with J >= 1, got {n_points}")
    return J


def _values(path):
    return np.asarray(getattr(path, "values", path), dtype=float)


def schauder_coeffs(path):
    """Coefficients of a path (or batch of paths) given on a dyadic grid."""
    f = _values(path)
    J = grid_level(f.shape[-1])
    levels = []
    for j in range(J):
        stride = 2 ** (J - j)
        half = stride // 2
        left = f[..., 0:-1:stride]
        mid = f[..., half::stride]
        right = f[..., stride::stride]
        levels.append(2.0 * 2.0 ** (j / 2) * (mid - 0.5 * right - 0.5 * left))
    return SchauderCoeffs(f[..., 0].copy(), f[..., -1] - f[..., 0], levels)


def reconstruct(coeffs, level=None):
    """Faber-Schauder synthesis back onto the level-``J`` dyadic grid."""
    J = coeffs.depth if level is None else int(level)
    if J > coeffs.depth:
        raise DomainError(f"coefficients stop at level {coeffs.depth - 1}, cannot build level {J}")
    f0 = np.asarray(coeffs.f0, dtype=float)
    f1 = np.asarray(coeffs.f1, dtype=float)
    vals = np.stack([f0, f0 + f1], axis=-1)
    for j in range(J):
        row = np.asarray(coeffs.levels[j], dtype=float)
        nxt = np.empty(vals.shape[:-1] + (2 ** (j + 1) + 1,))
        nxt[..., ::2] = vals
        nxt[..., 1::2] = 0.5 * (vals[..., :-1] + vals[..., 1:]) + row / (2.0 * 2.0 ** (j / 2))
        vals = nxt
    return vals


def check_besov_range(gamma, p):
    if not 1.0 < p < np.inf:
        raise DomainError(f"p must lie in (1, inf), got {p}")
    if not 1.0 / p < gamma < 1.0:
        raise DomainError(f"need 1/p < gamma < 1, got gamma={gamma}, p={p}")


def lp_sum(x, p):
    """``(sum |x|^p)^(1/p)`` along the last axis, scaled against overflow."""
    a = np.abs(np.asarray(x, dtype=float))
    m = a.max(axis=-1)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((a / safe[..., None]) ** p, axis=-1)
    return np.where(m > 0, m * s ** (1.0 / p), 0.0)


def level_terms(coeffs, gamma, p):
    """``T_j = 2^(-j(1/2 - gamma + 1/p)) (sum_k |f_jk|^p)^(1/p)``, stacked on the last axis."""
    terms = [
        2.0 ** (-j * (0.5 - gamma + 1.0 / p)) * lp_sum(row, p)
        for j, row in enumerate(coeffs.levels)
    ]
    return np.stack(terms, axis=-1)


def besov_seq_norm(coeffs, gamma, p):
    """Sequence norm ``max(|f0|, |f1|, sup_j T_j)`` equivalent to the
    Bes(gamma, p) norm on [0, 1]."""
    check_besov_range(gamma, p)
    T = level_terms(coeffs, gamma, p)
    norm = np.maximum(np.maximum(np.abs(coeffs.f0), np.abs(coeffs.f1)), T.max(axis=-1))
    return BesovReport(gamma, p, T, norm, tail_slope(T))


def tail_slope(T):
    """Least-squares slope of ``log2 T_j`` over the upper half of levels.

    Returns ``-inf`` when a term in the window is exactly zero.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[-1]
    if n < 2:
        return np.full(T.shape[:-1], np.nan)[()]
    j = np.arange(n // 2, n, dtype=float)
    window = T[..., n // 2:]
    zero = np.any(window <= 0, axis=-1)
    with np.errstate(divide="ignore"):
        y = np.log2(np.where(window > 0, window, 1.0))
    jc = j - j.mean()
    slope = (y * jc).sum(axis=-1) / (jc @ jc)
    return np.where(zero, -np.inf, slope)[()]


def classify_slope(slope, threshold=SLOPE_THRESHOLD):
    if slope < -threshold:
        return "member"
    if slope > threshold:
        return "growing"
    return "flat"


def bes_criterion(coeffs, gamma, p):
    """Level terms and their fitted tail trend for a single path."""
    check_besov_range(gamma, p)
    if coeffs.depth < 4:
        raise InsufficientData(f"need at least 4 levels, got {coeffs.depth}")
    T = level_terms(coeffs, gamma, p)
    if T.ndim != 1:
        raise DomainError("bes_criterion takes the coefficients of a single path")
    slope = float(tail_slope(T))
    return BesCriterion(T, slope, classify_slope(slope))


def direct_besov_norm(path, gamma, p):
    """Grid version of ``||f||_Lp + sup_t Delta_p(f)(t) / t^gamma``.

    Shifts run over multiples ``m / 2^J`` and integrals are left Riemann sums,
    so ``int_{I_s} |f(x+s) - f(x)|^p dx`` becomes
    ``h * sum_{i < N-m} |f_{i+m} - f_i|^p``.
    """
    if not 1.0 <= p < np.inf:
        raise DomainError(f"p must lie in [1, inf), got {p}")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    f = _values(path)
    N = 2 ** grid_level(f.shape[-1])
    h = 1.0 / N
    lp = (h * np.sum(np.abs(f[..., :-1]) ** p, axis=-1)) ** (1.0 / p)
    modulus = np.zeros(f.shape[:-1])
    best = np.zeros(f.shape[:-1])
    for m in range(1, N + 1):
        d = (h * np.sum(np.abs(f[..., m:-1] - f[..., :-m - 1]) ** p, axis=-1)) ** (1.0 / p)
        modulus = np.maximum(modulus, d)
        best = np.maximum(best, modulus / (m * h) ** gamma)
    return (lp + best)[()]


def holder_norm(path, gamma):
    """``sup |f| + max_{s != t} |f(t) - f(s)| / |t - s|^gamma`` over grid pairs."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    f = _values(path)
    N = 2 ** grid_level(f.shape[-1])
    best = np.zeros(f.shape[:-1])
    for m in range(1, N + 1):
        d = np.abs(f[..., m:] - f[..., :-m]).max(axis=-1)
        best = np.maximum(best, d / (m / N) ** gamma)
    return (np.abs(f).max(axis=-1) + best)[()]
