"""
Faber-Schauder coefficients
===========================

Transform a sampled path into its hat-function coefficients, rebuild it, and
watch how fast the level terms of a rough path decay.
"""

import numpy as np

from bifbm import DyadicGrid, ProcessParams, sample_paths, schauder_coeffs, reconstruct
from bifbm.schauder import besov_seq_norm

path = sample_paths(ProcessParams(0.5, 1.0), DyadicGrid(10), n_paths=1, seed=3)[0]
coeffs = schauder_coeffs(path)
print("levels:", coeffs.depth, " f0, f1:", coeffs.f0, coeffs.f1)

back = reconstruct(coeffs)
print("round trip error:", np.max(np.abs(back - path.values)))

# Brownian coefficients are standard normal at every level
for j in (2, 5, 9):
    print(f"level {j}: mean square {np.mean(coeffs.levels[j] ** 2):.3f}")

# affine functions have no wavelet part
t = DyadicGrid(10).points
print("affine:", np.max(np.abs(schauder_coeffs(2 - 3 * t).flat()[2:])))

report = besov_seq_norm(coeffs, gamma=0.5, p=6)
print("sequence norm at gamma = 1/2:", report.seq_norm, " tail slope:", report.slope)
