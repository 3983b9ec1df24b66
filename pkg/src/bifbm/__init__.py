"""Bifractional Brownian motion: exact sampling, Faber-Schauder Besov norms,
exact dyadic moments and Monte Carlo regularity experiments."""

__version__ = "0.1.0"

from .covariance import (
    ProcessParams,
    bbm_cov,
    covariance,
    fbm_cov,
    increment_variance,
    self_similarity_check,
    subfbm_cov,
)
from .errors import DomainError, InconsistentMoments, InsufficientData, NotPositiveDefinite
from .sampling import DyadicGrid, PathSample, SpdFactor, cholesky_spd, gram_matrix, sample_paths
from .schauder import (
    BesovReport,
    SchauderCoeffs,
    bes_criterion,
    besov_seq_norm,
    direct_besov_norm,
    holder_norm,
    reconstruct,
    schauder_coeffs,
)
from .moments import (
    correlation_sum_check,
    gaussian_abs_moment,
    gaussian_pair_bound_check,
    lln_variance_bound,
    normalized_cov,
    second_diff_cov_direct,
    second_diff_cov_identity,
    variance_scaling_check,
)
from .experiments import (
    orthonormal_basis_coordinates,
    run_besov_membership,
    run_holder_corollary,
    run_ito_nisio,
    run_lln,
)

__all__ = [
    "bbm_cov",
    "bes_criterion",
    "besov_seq_norm",
    "BesovReport",
    "cholesky_spd",
    "correlation_sum_check",
    "covariance",
    "direct_besov_norm",
    "DomainError",
    "DyadicGrid",
    "fbm_cov",
    "gaussian_abs_moment",
    "gaussian_pair_bound_check",
    "gram_matrix",
    "holder_norm",
    "InconsistentMoments",
    "increment_variance",
    "InsufficientData",
    "lln_variance_bound",
    "normalized_cov",
    "NotPositiveDefinite",
    "orthonormal_basis_coordinates",
    "PathSample",
    "ProcessParams",
    "reconstruct",
    "run_besov_membership",
    "run_holder_corollary",
    "run_ito_nisio",
    "run_lln",
    "sample_paths",
    "schauder_coeffs",
    "SchauderCoeffs",
    "second_diff_cov_direct",
    "second_diff_cov_identity",
    "self_similarity_check",
    "SpdFactor",
    "subfbm_cov",
    "variance_scaling_check",
]
