"""
Besov regularity at the critical index
======================================

At ``gamma = alpha * beta`` the level terms of a path stay flat; slightly
below they decay and slightly above they grow.
"""

from bifbm import ProcessParams
from bifbm.experiments import run_besov_membership

params = ProcessParams(0.6, 0.9)
res = run_besov_membership(params, p=6.0, level=10, n_paths=100, seed=7)

for entry in res.entries:
    terms = " ".join(f"{t:.3f}" for t in entry.pooled_terms)
    print(f"gamma {entry.gamma:.3f}: slope {entry.slope:+.4f} [{entry.verdict}]")
    print("   T_j:", terms)
