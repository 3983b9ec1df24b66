"""Exact second-order moments of the dyadic second differences

    u_jk = 2 * 2^(j/2) * (B((2k-1)/2^(j+1)) - B(2k/2^(j+1))/2 - B((2k-2)/2^(j+1))/2)

and the Gaussian absolute-moment functionals used to control
``2^-j sum_k |u_jk / sigma_jk|^p``.

Two independent routes give ``E[u_jk u_jk']``: a bilinear expansion of the
kernel over the nine stencil pairs (``method="direct"``) and the closed
finite-difference identity in ``Psi`` and ``Phi`` (``method="identity"``,
bifractional and fractional kernels only).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .covariance import covariance
from .errors import DomainError, InconsistentMoments

STENCIL = np.array([-0.5, 1.0, -0.5])
D2 = np.array([1.0, -2.0, 1.0])
D4 = np.array([1.0, -4.0, 6.0, -4.0, 1.0])

QUAD_NODES = 64
PAIR_BUDGET = 1e-8
ROW_BLOCK = 256


def _check_index(j, k, kp):
    if int(j) != j or j < 1:
        raise DomainError(f"level j must be an integer >= 1, got {j}")
    for name, v in (("k", k), ("k'", kp)):
        v = np.asarray(v)
        if np.any(v < 1) or np.any(v > 2**j):
            raise DomainError(f"{name} must lie in 1..2^{j}")


def second_diff_cov_direct(params, j, k, kp):
    """``E[u_jk u_jk']`` from the kernel at the nine stencil point pairs.

    ``k`` and ``kp`` broadcast against each other.
    """
    _check_index(j, k, kp)
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kp, dtype=float)
    scale = 2.0 ** (j + 1)
    total = 0.0
    for a, wx in enumerate(STENCIL):
        x = (2 * k - 2 + a) / scale
        for b, wy in enumerate(STENCIL):
            y = (2 * kp - 2 + b) / scale
            total = total + wx * wy * covariance(params, x, y)
    return 4.0 * 2.0**j * total


def identity_terms(params, k, kp):
    """``(D2_y D2_x Psi(0, 0), D4 Phi(0))`` with unit-step forward differences."""
    if params.kernel_kind == "subfractional":
        raise DomainError("the Psi/Phi identity holds for the bifractional kernel only")
    a, b = params.alpha, params.beta
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kp, dtype=float)
    psi = 0.0
    for x, cx in enumerate(D2):
        X = (2 * k - 2 + x) ** (2 * a)
        for y, cy in enumerate(D2):
            Y = (2 * kp - 2 + y) ** (2 * a)
            psi = psi + cx * cy * (X + Y) ** b
    phi = 0.0
    for x, c in enumerate(D4):
        phi = phi + c * np.abs(2 * (k - kp) - 2 + x) ** (2 * a * b)
    return psi, phi


def second_diff_cov_identity(params, j, k, kp):
    """``E[u_jk u_jk']`` via
    ``2^(j(1-2ab)) / 2^(b+2ab) * (D2_y D2_x Psi(0,0) - D4 Phi(0))``."""
    _check_index(j, k, kp)
    h = params.alpha * params.beta
    psi, phi = identity_terms(params, k, kp)
    return 2.0 ** (j * (1 - 2 * h)) / 2.0 ** (params.beta + 2 * h) * (psi - phi)


def _default_method(params):
    return "direct" if params.kernel_kind == "subfractional" else "identity"


def second_diff_cov(params, j, k, kp, method=None):
    method = method or _default_method(params)
    if method == "direct":
        return second_diff_cov_direct(params, j, k, kp)
    if method == "identity":
        return second_diff_cov_identity(params, j, k, kp)
    raise DomainError(f"unknown method {method!r}")


def second_diff_cov_matrix(params, j, method=None):
    """Full ``2^j x 2^j`` matrix of ``E[u_jk u_jk']``, exactly symmetric."""
    k = np.arange(1, 2**j + 1)
    C = second_diff_cov(params, j, k[:, None], k[None, :], method)
    return np.triu(C) + np.triu(C, 1).T


def second_diff_variance(params, j, method=None):
    """``E|u_jk|^2`` for ``k = 1 .. 2^j``."""
    k = np.arange(1, 2**j + 1)
    return second_diff_cov(params, j, k, k, method)


def second_diff_sigma(params, j, method=None):
    var = second_diff_variance(params, j, method)
    if np.any(var <= 0):
        raise InconsistentMoments(f"non-positive variance at level {j}: min {var.min():.3g}")
    return np.sqrt(var)


@dataclass
class SecondDiffMoments:
    params: object
    level: int
    cov: np.ndarray
    sigma: np.ndarray

    @property
    def rho(self):
        r = self.cov / np.outer(self.sigma, self.sigma)
        np.fill_diagonal(r, 1.0)
        return r


def normalized_cov(params, j, method=None):
    """Covariances of ``u_j.`` together with the correlation matrix of ``v_j.``."""
    C = second_diff_cov_matrix(params, j, method)
    d = np.diag(C).copy()
    if np.any(d <= 0):
        raise InconsistentMoments(f"non-positive variance at level {j}: min {d.min():.3g}")
    return SecondDiffMoments(params, j, C, np.sqrt(d))


@dataclass
class ScalingBracket:
    """Range of ``E|u_jk|^2 * 2^(-j(1-2ab))`` per level and overall."""

    levels: np.ndarray
    level_min: np.ndarray
    level_max: np.ndarray
    j_spread: float

    @property
    def ratio_min(self):
        return float(self.level_min.min())

    @property
    def ratio_max(self):
        return float(self.level_max.max())

    @property
    def stable(self):
        # the bracket may not widen by more than 1% from one level to the next
        up = np.all(self.level_max[1:] <= 1.01 * self.level_max[:-1])
        down = np.all(self.level_min[1:] >= 0.99 * self.level_min[:-1])
        return bool(up and down)

    def to_dict(self):
        return {
            "levels": self.levels.tolist(),
            "level_min": self.level_min.tolist(),
            "level_max": self.level_max.tolist(),
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "j_spread": self.j_spread,
            "stable": self.stable,
        }


def variance_scaling_check(params, j_range, method="direct"):
    """Empirical two-sided bracket for ``E|u_jk|^2 / 2^(j(1-2ab))``.

    ``j_spread`` is the largest relative deviation of the ratio at a fixed
    ``k`` across levels; it vanishes when the scaling law holds exactly.
    """
    levels = np.array(sorted(set(int(j) for j in j_range)))
    if levels.size == 0:
        raise DomainError("j_range is empty")
    h = params.hurst
    ratios = [second_diff_variance(params, j, method) * 2.0 ** (-j * (1 - 2 * h)) for j in levels]
    shared = 2 ** levels[0]
    ref = ratios[0][:shared]
    spread = max(float(np.max(np.abs(r[:shared] - ref) / np.abs(ref))) for r in ratios)
    return ScalingBracket(
        levels,
        np.array([r.min() for r in ratios]),
        np.array([r.max() for r in ratios]),
        spread,
    )


def correlation_sum(params, j, method=None):
    """``S_j = sum_{k,k'} (E v_jk v_jk')^2``."""
    rho = normalized_cov(params, j, method).rho
    return float(np.sum(rho**2))


def correlation_sum_check(params, j_max, j_ref=4, growth=1.25, method=None):
    """``S_j / 2^j`` for ``j = 1 .. j_max`` and whether every level above
    ``j_ref`` stays within ``growth`` times the value at ``j_ref``."""
    levels = np.arange(1, j_max + 1)
    ratio = np.array([correlation_sum(params, int(j), method) / 2.0**j for j in levels])
    ok = True
    if j_max > j_ref:
        ok = bool(np.all(ratio[j_ref:] <= growth * ratio[j_ref - 1]))
    return {"levels": levels.tolist(), "ratio": ratio.tolist(), "bounded": ok}


def gaussian_abs_moment(p):
    """``c_p = E|Z|^p = 2^(p/2) Gamma((p+1)/2) / sqrt(pi)``."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise DomainError(f"p must be positive, got {p}")
    out = np.exp(0.5 * p * np.log(2.0) + gammaln(0.5 * (p + 1)) - 0.5 * np.log(np.pi))
    return out[()] if out.ndim == 0 else out


def abs_moment_product(rho, p, n_nodes=QUAD_NODES):
    """``E|X|^p |Y|^p`` for standard normals with correlation ``rho``.

    In polar coordinates ``X = r cos t``, ``Y = r cos(t - phi)`` with
    ``cos phi = rho``; the radial integral is ``2^p Gamma(p+1)`` and the
    angular one is integrated by Gauss-Legendre on the arcs between the
    zeros of the two cosines, where the integrand is smooth up to its
    endpoints.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) > 1):
        raise DomainError("correlation must lie in [-1, 1]")
    phi = np.arccos(rho)[..., None]
    kink = np.mod(phi + 0.5 * np.pi, np.pi)
    lo = np.minimum(kink, 0.5 * np.pi)
    hi = np.maximum(kink, 0.5 * np.pi)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    # smoothstep substitution flattens the |t|^p behaviour at arc endpoints
    w = 0.5 * (nodes + 1.0)
    u = w * w * (3.0 - 2.0 * w)
    du = 3.0 * w * (1.0 - w) * weights
    total = 0.0
    for a, b in ((0.0, lo), (lo, hi), (hi, np.pi)):
        theta = a + (b - a) * u
        g = np.abs(np.cos(theta)) ** p * np.abs(np.cos(theta - phi)) ** p
        total = total + (b - a)[..., 0] * (g @ du)
    radial = np.exp(p * np.log(2.0) + gammaln(p + 1.0))
    out = 2.0 * total * radial / (2.0 * np.pi)
    return out[()] if np.ndim(out) == 0 else out


def pair_functional(rho, p):
    """``E(|X|^p - c_p)(|Y|^p - c_p)`` as a function of the correlation."""
    return abs_moment_product(rho, p) - gaussian_abs_moment(p) ** 2


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    budget: float

    @property
    def passed(self):
        return bool(self.lhs <= self.rhs + self.budget)

    def to_dict(self, **extra):
        return {**extra, "lhs": self.lhs, "rhs": self.rhs, "budget": self.budget, "pass": self.passed}


def gaussian_pair_bound_check(rho, p):
    """``|E(|X|^p - c_p)(|Y|^p - c_p)| <= (c_2p - c_p^2) rho^2``."""
    if abs(rho) > 1:
        raise DomainError(f"|rho| must be <= 1, got {rho}")
    lhs = abs(float(pair_functional(rho, p)))
    var = gaussian_abs_moment(2 * p) - gaussian_abs_moment(p) ** 2
    return BoundCheck(lhs, float(var * rho**2), PAIR_BUDGET)


def lln_variance_bound(params, j, p, method=None):
    """``E[sum_k (|v_jk|^p - c_p)]^2`` against ``(c_2p - c_p^2) S_j``."""
    rho = normalized_cov(params, j, method).rho
    lhs = 0.0
    for start in range(0, rho.shape[0], ROW_BLOCK):
        lhs += float(np.sum(pair_functional(rho[start:start + ROW_BLOCK], p)))
    var = gaussian_abs_moment(2 * p) - gaussian_abs_moment(p) ** 2
    rhs = float(var * np.sum(rho**2))
    # quadrature error accumulates over 4^j pairs
    return BoundCheck(lhs, rhs, PAIR_BUDGET * rho.size)
