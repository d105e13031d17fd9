"""
Pair coherent states
====================

A pair coherent state is an eigenstate of K- = ab inside one charge sector
|n+q, n>. Build a few, check the eigenvalue equation and the Casimir.
"""

import numpy as np

from bipair import fock, states

zeta = 1.5 + 0.5j

# the cutoff comes from the tail bound; tail_tol is the discarded probability
for q in range(3):
    s = states.make_pair_coherent(zeta, q, tail_tol=1e-12)
    c = s.coeffs
    print(f"q={q}: {len(c)} levels, norm {np.linalg.norm(c):.15f}, "
          f"K- residual {states.pair_eigen_residual(s):.1e}")

# the top level has no neighbour above it, so K- is only exact below it.
# including it shows the size of the truncation error, ~ sqrt(tail_tol)
s = states.make_pair_coherent(zeta, 1, tail_tol=1e-12)
print("with the edge:", states.pair_eigen_residual(s, include_edge=True))

# Casimir eigenvalue (1 - q^2)/4, away from the edge
cas = fock.apply_pair_casimir(s.amplitudes).coeffs
print("Casimir / coeffs:", (cas[:5] / s.coeffs[:5]).real, "expected", (1 - 1 ** 2) / 4)
