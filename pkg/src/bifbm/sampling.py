"""Exact Gaussian synthesis of process paths on dyadic grids.

Paths are drawn as ``B = L Z`` where ``L L^T`` is the covariance Gram matrix
over the nonzero grid points and ``Z`` is a vector of standard normals. The
variates of path ``i`` come from a Philox stream keyed by ``(seed, i)`` so the
output does not depend on how paths are scheduled across threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np
from scipy.linalg import lapack
from threadpoolctl import threadpool_limits

from .covariance import ProcessParams, covariance
from .errors import DomainError, NotPositiveDefinite

PIVOT_REL_TOL = 1e-12
JITTER = 1e-12
# paths per work unit; fixed so results never depend on the worker count
CHUNK = 64


@dataclass(frozen=True)
class DyadicGrid:
    """The points ``i / 2^level`` for ``i = 0 .. 2^level``."""

    level: int

    def __post_init__(self):
        if int(self.level) != self.level or self.level < 1:
            raise DomainError(f"grid level must be an integer >= 1, got {self.level}")

    @property
    def size(self):
        return 2**self.level + 1

    @property
    def points(self):
        return np.arange(self.size, dtype=float) / 2**self.level


@dataclass
class PathSample:
    grid: DyadicGrid
    values: np.ndarray
    seed: int
    params: ProcessParams
    index: int = 0


@dataclass
class SpdFactor:
    """Lower-triangular ``L`` with ``L @ L.T == G``."""

    L: np.ndarray
    jitter: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.L.shape[0]


def gram_matrix(params, grid):
    """Covariance matrix over the nonzero grid points ``t_1 .. t_{2^J}``.

    ``t = 0`` is left out: ``R(0, .) = 0`` would make the matrix singular.
    """
    t = grid.points[1:]
    G = covariance(params, t[:, None], t[None, :])
    # exact symmetry regardless of argument order inside the kernel
    return np.triu(G) + np.triu(G, 1).T


def cholesky_spd(G, jitter=False):
    """Cholesky factor of a symmetric matrix, refusing to regularize silently.

    Raises ``NotPositiveDefinite`` when a pivot ``L_ii^2`` is at or below
    ``1e-12 * max(diag(G))``. With ``jitter=True`` a diagonal shift of
    ``1e-12`` is added first and recorded on the returned factor.
    """
    G = np.array(G, dtype=float, order="F", copy=True)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {G.shape}")
    eps = JITTER if jitter else 0.0
    if eps:
        G[np.diag_indices_from(G)] += eps
    threshold = PIVOT_REL_TOL * max(float(np.max(np.diag(G))), 0.0) if G.size else 0.0
    with threadpool_limits(limits=1):
        c, info = lapack.dpotrf(G, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        i = info - 1
        raise NotPositiveDefinite(i, c[i, i], threshold)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    pivots = np.diag(c) ** 2
    bad = np.flatnonzero(pivots <= threshold)
    if bad.size:
        i = bad[0]
        raise NotPositiveDefinite(i, pivots[i], threshold)
    return SpdFactor(np.tril(c), jitter=eps, metadata={"jitter": eps})


def path_normals(seed, index, n):
    """The ``n`` standard normals assigned to path ``index`` under ``seed``."""
    bitgen = np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))
    return np.random.Generator(bitgen).standard_normal(n)


def normals_matrix(seed, n, start, stop):
    """Columns ``start .. stop-1`` are the variates of those path indices."""
    Z = np.empty((n, stop - start))
    for col, i in enumerate(range(start, stop)):
        Z[:, col] = path_normals(seed, i, n)
    return Z


def _workers(threads):
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise DomainError(f"threads must be >= 1, got {threads}")
    return int(threads)


def map_chunks(func, n_items, threads=None):
    """Apply ``func(start, stop)`` over fixed-size chunks, in order.

    BLAS is pinned to one thread so each chunk is computed identically
    whatever the number of workers.
    """
    bounds = [(a, min(a + CHUNK, n_items)) for a in range(0, n_items, CHUNK)]
    with threadpool_limits(limits=1):
        workers = min(_workers(threads), max(len(bounds), 1))
        if workers == 1:
            return [func(a, b) for a, b in bounds]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda ab: func(*ab), bounds))


def synthesize(L, Z, n_terms=None):
    """Grid values (with the leading zero) of ``sum_{n < n_terms} L[:, n] Z[n]``.

    ``Z`` has one column per path; the result has one row per path.
    """
    n = L.shape[0]
    N = n if n_terms is None else int(n_terms)
    out = np.zeros((Z.shape[1], n + 1))
    if N > 0:
        out[:, 1:] = (L[:, :N] @ Z[:N, :]).T
    return out


def sample_matrix(params, grid, n_paths, seed, threads=None, jitter=False, factor=None):
    """All sampled paths as an ``(n_paths, 2^J + 1)`` array."""
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    if factor is None:
        factor = cholesky_spd(gram_matrix(params, grid), jitter=jitter)
    L = factor.L
    n = L.shape[0]

    def chunk(a, b):
        return synthesize(L, normals_matrix(seed, n, a, b))

    return np.vstack(map_chunks(chunk, n_paths, threads))


def sample_paths(params, grid, n_paths, seed, threads=None, jitter=False):
    """Draw ``n_paths`` exact realizations on ``grid``.

    Every path has value 0 at ``t = 0``. Same arguments give identical bits.
    """
    values = sample_matrix(params, grid, n_paths, seed, threads=threads, jitter=jitter)
    return [PathSample(grid, values[i], int(seed), params, i) for i in range(n_paths)]
