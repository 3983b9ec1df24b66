"""
Truncated series expansion
==========================

Expand each path over the orthonormal basis given by the Cholesky factor and
measure the Besov and Hölder size of what the first N terms leave out.
"""

import numpy as np

from bifbm import ProcessParams
from bifbm.experiments import residual_variance_check, run_ito_nisio

params = ProcessParams(0.9, 0.7)
res = run_ito_nisio(params, level=9, truncations=[32, 64, 128, 256, 512], epsilon=0.05,
                    p=40, n_paths=50, seed=2, holder_gamma=0.5)

print(" N    median Besov   median Hölder   max rho^2")
for N, b, h, r in zip(res.truncations, res.median_besov, res.median_holder, res.max_rho2):
    print(f"{N:4d}   {b:10.4f}   {h:12.4f}   {r:10.3e}")
print(res.contracts())

chk = residual_variance_check(params, 9, 128, [(3, 7), (6, 50), (8, 200)], 10_000, seed=3)
print("residual variance z-scores:", np.round(chk.z, 2))
