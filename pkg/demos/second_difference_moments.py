"""
Moments of the second differences
=================================

Exact covariances of the scaled second differences, their scaling across
levels, and the Gaussian bounds that drive the law of large numbers.
"""

import numpy as np

from bifbm import ProcessParams
from bifbm.experiments import run_lln
from bifbm.moments import (
    correlation_sum_check,
    gaussian_abs_moment,
    lln_variance_bound,
    normalized_cov,
    second_diff_cov_matrix,
    variance_scaling_check,
)

params = ProcessParams(0.7, 0.8)

# the closed-form identity agrees with the direct sum
direct = second_diff_cov_matrix(params, 6, "direct")
fast = second_diff_cov_matrix(params, 6, "identity")
print("identity vs direct:", np.max(np.abs(fast - direct)))

bracket = variance_scaling_check(params, range(1, 11))
print(f"scaled variances lie in [{bracket.ratio_min:.4f}, {bracket.ratio_max:.4f}]")

print("S_j / 2^j:", np.round(correlation_sum_check(params, 8)["ratio"], 5))

rho = normalized_cov(params, 5).rho
print("largest off-diagonal correlation:", np.max(np.abs(rho - np.eye(len(rho)))))

bound = lln_variance_bound(params, 6, 3.0)
print(f"variance of the level sum {bound.lhs:.3f} <= {bound.rhs:.3f}")

res = run_lln(params, p=2.0, level=10, n_paths=200, seed=5)
print(f"s_9 = {res.mean[-1]:.4f} +- {res.se[-1]:.4f}, c_2 = {gaussian_abs_moment(2):g}")
