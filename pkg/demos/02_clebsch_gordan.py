"""
Coupling two discrete series
============================

D^q1 x D^q2 splits into D^q with q = q1 + q2 + 2n + 1. The coupling
coefficients come from a closed form; a brute-force route finds the
lowest-weight vector as the kernel of K- and raises it.
"""

import numpy as np

from bipair import cg

np.set_printoptions(precision=6, suppress=True, linewidth=100)

# q1 = q2 = 0, n = 0: every row is uniform
print(cg.cg_block(0, 0, 0, 4).table)

# a general block, formula next to the oracle
q1, q2, n = 2, 1, 2
f = cg.cg_block(q1, q2, n, 4)
o = cg.lowest_weight_oracle(q1, q2, n, 4)
rep = cg.validate_block(f, o)
print(f"\nq1={q1} q2={q2} n={n}: q={f.q}, sign {rep.sign:+d}, max diff {rep.max_deviation:.1e}")
print(f.row(0))

# rows of different n at the same level are orthonormal
blocks = [cg.cg_block(q1, q2, m, 4) for m in range(4)]
print("\nGram matrix at level 3:\n", cg.level_gram(blocks, 3))

# the closed form as usually quoted does not normalize (see the notes)
print("\nquoted form, q1=1 q2=0 n=0 k=0:", cg.cg_coefficient_as_printed(1, 0, 0, 0, 0),
      "vs", cg.cg_coefficient(1, 0, 0, 0, 0))
