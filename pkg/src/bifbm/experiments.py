"""Monte Carlo drivers built on exact sampling and exact moments.

* ``run_lln``: the level statistic ``s_j = 2^-j sum_k |v_jk|^p``, whose limit
  is ``c_p``.
* ``run_besov_membership``: tail trend of the sequence-norm level terms at
  ``gamma`` around the self-similarity index.
* ``run_ito_nisio`` / ``run_holder_corollary``: truncated expansions over the
  Cholesky (innovations) basis of the grid-restricted RKHS, and the decay of
  their residuals in Besov and Hölder norms.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import __version__
from .errors import DomainError
from .moments import gaussian_abs_moment, second_diff_sigma
from .sampling import (
    DyadicGrid,
    cholesky_spd,
    gram_matrix,
    map_chunks,
    normals_matrix,
    sample_matrix,
    synthesize,
)
from .schauder import (
    besov_seq_norm,
    check_besov_range,
    classify_slope,
    holder_norm,
    level_terms,
    lp_sum,
    schauder_coeffs,
    tail_slope,
)

MEDIAN_SLACK = 1.05
FULL_RESIDUAL_TOL = 1e-10
BASIS = "cholesky-innovations"


def _manifest(kind, params, **config):
    return {"experiment": kind, "params": params.as_dict(), "version": __version__, **config}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    se = x.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(x.shape[1:], np.nan)
    return x.mean(axis=0), se


# --------------------------------------------------------------------------
# law of large numbers for the normalized second differences


@dataclass
class LlnRunResult:
    params: object
    p: float
    level: int
    n_paths: int
    seed: int
    levels: np.ndarray
    stats: np.ndarray  # (n_paths, len(levels))
    target: float
    z_tol: float = 4.0

    @property
    def mean(self):
        return _mean_se(self.stats)[0]

    @property
    def se(self):
        return _mean_se(self.stats)[1]

    @property
    def z(self):
        return (self.mean - self.target) / self.se

    @property
    def besov_hypothesis(self):
        return bool(self.p > 1.0 / self.params.hurst)

    def top_level_ok(self):
        return bool(abs(self.z[-1]) <= self.z_tol)

    def manifest(self):
        return _manifest(
            "lln", self.params, p=self.p, level=self.level, n_paths=self.n_paths, seed=self.seed
        )

    def tables(self):
        rows = [
            (j, m, s, z, self.target)
            for j, m, s, z in zip(self.levels, self.mean, self.se, self.z)
        ]
        return {"levels.csv": (["j", "mean", "se", "z", "c_p"], rows)}

    def summary(self):
        j = self.levels[-1]
        return [
            (
                f"mean s_{j} = {self.mean[-1]:.6f} vs c_p = {self.target:.6f} "
                f"({self.z[-1]:+.2f} SE, tolerance {self.z_tol:g} SE)",
                self.top_level_ok(),
            )
        ]


def level_statistics(values, params, p, sigmas=None):
    """``s_j`` for ``j = 1 .. J-1``, one row per path."""
    coeffs = schauder_coeffs(values)
    J = coeffs.depth
    out = []
    for j in range(1, J):
        sigma = second_diff_sigma(params, j) if sigmas is None else sigmas[j]
        v = coeffs.levels[j] / sigma
        out.append(np.mean(np.abs(v) ** p, axis=-1))
    return np.stack(out, axis=-1)


def run_lln(params, p, level, n_paths, seed, threads=None):
    """Sample paths and compare ``2^-j sum_k |v_jk|^p`` with ``c_p``.

    ``sigma_jk`` comes from the exact moments, so ``E s_j = c_p`` at every
    level.
    """
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    if level < 6:
        raise DomainError(f"need grid level >= 6, got {level}")
    grid = DyadicGrid(level)
    values = sample_matrix(params, grid, n_paths, seed, threads=threads)
    stats = level_statistics(values, params, p)
    return LlnRunResult(
        params, p, level, n_paths, seed, np.arange(1, level), stats, float(gaussian_abs_moment(p))
    )


# --------------------------------------------------------------------------
# Besov membership trends


@dataclass
class MembershipEntry:
    """Level terms at one ``gamma`` for all paths.

    The aggregate trend is fitted to ``(mean over paths of T_j^p)^(1/p)``,
    an unbiased estimate of ``E T_j^p``; averaging per-path log-slopes
    instead is biased upward at coarse levels where ``T_j`` sums few terms.
    """

    offset: float
    gamma: float
    p: float
    level_terms: np.ndarray  # (n_paths, J)
    slopes: np.ndarray  # per path

    @property
    def pooled_terms(self):
        return lp_sum(self.level_terms.T, self.p) / self.level_terms.shape[0] ** (1.0 / self.p)

    @property
    def slope(self):
        return float(tail_slope(self.pooled_terms))

    @property
    def path_slope(self):
        return float(np.mean(self.slopes))

    @property
    def mean_log2_terms(self):
        with np.errstate(divide="ignore"):
            return np.log2(self.level_terms).mean(axis=0)

    @property
    def verdict(self):
        return classify_slope(self.slope)

    def contract(self, flat_tol=0.05, trend=0.03):
        if self.offset == 0:
            return bool(abs(self.slope) <= flat_tol)
        if self.offset < 0:
            return bool(self.slope <= -trend)
        return bool(self.slope >= trend)


@dataclass
class MembershipResult:
    params: object
    p: float
    level: int
    n_paths: int
    seed: int
    entries: list

    def by_offset(self, offset):
        for e in self.entries:
            if np.isclose(e.offset, offset):
                return e
        raise KeyError(offset)

    def manifest(self):
        return _manifest(
            "besov",
            self.params,
            p=self.p,
            level=self.level,
            n_paths=self.n_paths,
            seed=self.seed,
            gamma_offsets=[e.offset for e in self.entries],
        )

    def tables(self):
        rows = []
        for e in self.entries:
            for j, (t, lt) in enumerate(zip(e.pooled_terms, e.mean_log2_terms)):
                rows.append((e.offset, e.gamma, j, t, lt))
        slopes = [
            (e.offset, e.gamma, e.slope, e.path_slope, e.verdict, e.contract())
            for e in self.entries
        ]
        return {
            "level_terms.csv": (["offset", "gamma", "j", "pooled_T", "mean_log2_T"], rows),
            "slopes.csv": (["offset", "gamma", "slope", "path_slope", "verdict", "pass"], slopes),
        }

    def summary(self):
        return [
            (f"gamma = {e.gamma:.4f} (offset {e.offset:+g}): slope {e.slope:+.4f} [{e.verdict}]",
             e.contract())
            for e in self.entries
        ]


def run_besov_membership(params, p, level, n_paths, seed, gamma_offsets=(-0.05, 0.0, 0.05),
                         threads=None, values=None):
    """Level terms ``T_j`` at ``gamma = H + offset`` for sampled paths.

    ``values`` replaces the sampled paths (one row per path) when given.
    """
    gammas = [params.hurst + d for d in gamma_offsets]
    for g in gammas:
        check_besov_range(g, p)
    if values is None:
        values = sample_matrix(params, DyadicGrid(level), n_paths, seed, threads=threads)
    values = np.atleast_2d(values)
    coeffs = schauder_coeffs(values)
    entries = []
    for d, g in zip(gamma_offsets, gammas):
        T = level_terms(coeffs, g, p)
        entries.append(MembershipEntry(float(d), float(g), float(p), T, np.atleast_1d(tail_slope(T))))
    return MembershipResult(params, p, coeffs.depth, values.shape[0], seed, entries)


# --------------------------------------------------------------------------
# truncated expansions


def orthonormal_basis_coordinates(params, level):
    """Cholesky factor ``L`` of the Gram matrix on the nonzero grid points.

    ``L[i, n]`` is the coordinate of ``1_[0, t_i]`` on the ``n``-th basis
    element ``phi_n = sum_i (L^-1)[n, i] 1_[0, t_i]``.
    """
    return cholesky_spd(gram_matrix(params, DyadicGrid(level))).L


def orthonormality_residual(L, G):
    """``max |L^-1 G L^-T - I|``."""
    A = solve_triangular(L, G, lower=True)
    M = solve_triangular(L, A.T, lower=True)
    return float(np.max(np.abs(M - np.eye(L.shape[0]))))


def basis_stencils(L):
    """Schauder coefficients of every basis column; row ``n`` holds the
    stencil applied to ``L[:, n]`` (all levels flattened, ``f0, f1`` dropped)."""
    cols = np.zeros((L.shape[1], L.shape[0] + 1))
    cols[:, 1:] = L.T
    return schauder_coeffs(cols).flat()[:, 2:]


def residual_variances(L, truncations):
    """``(rho^N_jk)^2`` for each ``N``: tail sums of squared basis stencils.

    Rows follow ``truncations``; columns are ``(j, k)`` flattened level by
    level.
    """
    theta2 = basis_stencils(L) ** 2
    # tail[N] = sum_{n >= N} theta2[n], accumulated from the end
    tail = np.cumsum(theta2[::-1], axis=0)[::-1]
    tail = np.vstack([tail, np.zeros((1, tail.shape[1]))])
    return tail[np.asarray(truncations, dtype=int)]


def flat_index(j, k):
    """Column of coefficient ``(j, k)``, ``k`` starting at 1, in flattened layout."""
    return 2**j - 1 + (k - 1)


def check_ito_nisio_hypothesis(hurst, epsilon, p):
    if hurst <= 0.5:
        raise DomainError(f"need alpha*beta > 1/2, got {hurst:.6g} <= 0.5")
    if epsilon <= 0 or p < 1:
        raise DomainError(f"need epsilon > 0 and p >= 1, got epsilon={epsilon}, p={p}")
    margin = hurst - epsilon - 1.0 / p
    if not margin > 0.5:
        raise DomainError(
            f"need 1/2 < alpha*beta - epsilon - 1/p, got {hurst:.6g} - {epsilon:g} - 1/{p:g} "
            f"= {margin:.6g}"
        )


def _check_truncations(truncations, n):
    N = [int(v) for v in truncations]
    if not N or any(b <= a for a, b in zip(N, N[1:])):
        raise DomainError(f"truncations must be strictly increasing, got {N}")
    if N[0] < 0 or N[-1] != n:
        raise DomainError(f"truncations must lie in 0..{n} and end at {n}, got {N}")
    return N


def truncation_residuals(L, Z, truncations):
    """Yield ``(N, B - X_N)`` with both sides synthesized from the same ``Z``."""
    B = synthesize(L, Z)
    for N in truncations:
        yield N, B - synthesize(L, Z, N)


@dataclass
class ItoNisioRunResult:
    params: object
    level: int
    truncations: list
    epsilon: float
    p: float
    n_paths: int
    seed: int
    besov_norms: np.ndarray  # (len(truncations), n_paths)
    holder_gamma: float = None
    holder_norms: np.ndarray = None
    rho2: np.ndarray = field(default=None, repr=False)  # (len(truncations), 2^J - 1)

    @property
    def gamma(self):
        return self.params.hurst - self.epsilon

    @property
    def median_besov(self):
        return np.median(self.besov_norms, axis=1)

    @property
    def median_holder(self):
        return None if self.holder_norms is None else np.median(self.holder_norms, axis=1)

    @property
    def max_rho2(self):
        return self.rho2.max(axis=1)

    def contracts(self):
        out = {
            "full_residual_zero": bool(np.max(self.besov_norms[-1]) <= FULL_RESIDUAL_TOL),
            "median_nonincreasing": _nonincreasing(self.median_besov, MEDIAN_SLACK),
            "rho2_nonincreasing": bool(np.all(np.diff(self.rho2, axis=0) <= 0)),
        }
        if self.holder_norms is not None:
            out["holder_full_zero"] = bool(np.max(self.holder_norms[-1]) <= FULL_RESIDUAL_TOL)
            out["holder_median_nonincreasing"] = _nonincreasing(self.median_holder, MEDIAN_SLACK)
        return out

    def manifest(self):
        return _manifest(
            "ito-nisio",
            self.params,
            level=self.level,
            truncations=self.truncations,
            epsilon=self.epsilon,
            p=self.p,
            gamma=self.gamma,
            holder_gamma=self.holder_gamma,
            n_paths=self.n_paths,
            seed=self.seed,
            basis=BASIS,
        )

    def tables(self):
        header = ["N", "median_besov", "max_besov", "max_rho2"]
        cols = [self.median_besov, self.besov_norms.max(axis=1), self.max_rho2]
        if self.holder_norms is not None:
            header += ["median_holder", "max_holder"]
            cols += [self.median_holder, self.holder_norms.max(axis=1)]
        rows = [(N, *vals) for N, vals in zip(self.truncations, zip(*cols))]
        return {"residuals.csv": (header, rows)}

    def summary(self):
        names = {
            "full_residual_zero": f"Bes({self.gamma:.4g},{self.p:g}) residual at N={self.truncations[-1]} <= 1e-10",
            "median_nonincreasing": "median Besov residual non-increasing in N (5% slack)",
            "rho2_nonincreasing": "exact residual variances non-increasing in N",
            "holder_full_zero": "Hölder residual at full N <= 1e-10",
            "holder_median_nonincreasing": f"median Hölder-{self.holder_gamma} residual non-increasing in N (5% slack)",
        }
        return [(names[k], v) for k, v in self.contracts().items()]


def _nonincreasing(x, slack):
    x = np.asarray(x, dtype=float)
    return bool(np.all(x[1:] <= slack * x[:-1]))


def run_ito_nisio(params, level, truncations, epsilon, p, n_paths, seed, holder_gamma=None,
                  threads=None):
    """Residual norms of the truncated expansion ``X_N = L[:, :N] Z[:N]``.

    The Besov norm is the sequence norm at ``gamma = H - epsilon``. With
    ``holder_gamma`` the Hölder norm of each residual is reported as well.
    """
    check_ito_nisio_hypothesis(params.hurst, epsilon, p)
    gamma = params.hurst - epsilon
    check_besov_range(gamma, p)
    if holder_gamma is not None and not 0 < holder_gamma < params.hurst:
        raise DomainError(f"need 0 < gamma < alpha*beta, got {holder_gamma}")
    n = 2**level
    N_list = _check_truncations(truncations, n)
    L = orthonormal_basis_coordinates(params, level)

    def chunk(a, b):
        Z = normals_matrix(seed, n, a, b)
        bes, hol = [], []
        for _, res in truncation_residuals(L, Z, N_list):
            bes.append(besov_seq_norm(schauder_coeffs(res), gamma, p).seq_norm)
            if holder_gamma is not None:
                hol.append(holder_norm(res, holder_gamma))
        return np.array(bes), np.array(hol)

    parts = map_chunks(chunk, n_paths, threads)
    besov = np.concatenate([b for b, _ in parts], axis=1)
    holder = np.concatenate([h for _, h in parts], axis=1) if holder_gamma is not None else None
    return ItoNisioRunResult(
        params, level, N_list, epsilon, p, n_paths, seed, besov, holder_gamma, holder,
        residual_variances(L, N_list),
    )


def run_holder_corollary(params, level, truncations, gamma, n_paths, seed, threads=None):
    """Hölder-``gamma`` residuals of the truncated expansion, ``gamma < H``.

    Only the Hölder half of ``run_ito_nisio`` is needed, so no Besov range
    is imposed.
    """
    if params.hurst <= 0.5:
        raise DomainError(f"need alpha*beta > 1/2, got {params.hurst:.6g}")
    if not 0 < gamma < params.hurst:
        raise DomainError(f"need 0 < gamma < alpha*beta, got {gamma}")
    n = 2**level
    N_list = _check_truncations(truncations, n)
    L = orthonormal_basis_coordinates(params, level)

    def chunk(a, b):
        Z = normals_matrix(seed, n, a, b)
        return np.array([holder_norm(res, gamma) for _, res in truncation_residuals(L, Z, N_list)])

    holder = np.concatenate(map_chunks(chunk, n_paths, threads), axis=1)
    median = np.median(holder, axis=1)
    return {
        "truncations": N_list,
        "gamma": gamma,
        "norms": holder,
        "median": median,
        "full_zero": bool(np.max(holder[-1]) <= FULL_RESIDUAL_TOL),
        "median_nonincreasing": _nonincreasing(median, MEDIAN_SLACK),
    }


@dataclass
class ResidualVarianceCheck:
    N: int
    spots: list
    exact: np.ndarray
    empirical: np.ndarray
    se: np.ndarray

    @property
    def z(self):
        # a spot untouched by the tail has exact and empirical variance 0
        diff = self.empirical - self.exact
        with np.errstate(divide="ignore", invalid="ignore"):
            z = diff / self.se
        return np.where(self.se > 0, z, np.where(diff == 0, 0.0, np.inf))

    def passed(self, z_tol=4.0):
        return bool(np.all(np.abs(self.z) <= z_tol))


def residual_variance_check(params, level, N, spots, n_paths, seed, threads=None):
    """Empirical ``Var(u_jk - z_jk)`` at the ``(j, k)`` in ``spots`` against
    the exact tail sums, from ``n_paths`` synthesized residual paths."""
    n = 2**level
    L = orthonormal_basis_coordinates(params, level)
    cols = [flat_index(j, k) for j, k in spots]

    def chunk(a, b):
        Z = normals_matrix(seed, n, a, b)
        (_, res), = truncation_residuals(L, Z, [N])
        return schauder_coeffs(res).flat()[:, 2:][:, cols]

    r = np.vstack(map_chunks(chunk, n_paths, threads))
    sq = r**2
    exact = residual_variances(L, [N])[0, cols]
    return ResidualVarianceCheck(
        N, list(spots), exact, sq.mean(axis=0), sq.std(axis=0, ddof=1) / np.sqrt(n_paths)
    )
