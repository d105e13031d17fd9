"""
Photon statistics of the bi-pair state
======================================

q1 = q2 = n = 0. P_k on the anti-diagonals, the Fano factor, and the
Mandel Q of one mode over a |zeta| grid.
"""

import numpy as np

from bipair import states, stats

for z in (0.5, 1.0, 2.0, 4.0):
    psi = states.make_bipair_coupled(z, 0, 0, 0, cg="formula")
    pk = stats.joint_pk(psi)
    print(f"|zeta|={z}: <k>={stats.moments(pk)[0]:.6f} closed {stats.mean_k_closed(z):.6f}, "
          f"Fano {stats.fano(pk):.4f}")

psi = states.make_bipair_coupled(2.0, 0, 0, 0, cg="formula")
p = stats.joint_pk(psi).probabilities[:8]
ref = stats.poisson_reference(stats.moments(stats.joint_pk(psi))[0], 7).probabilities
print("\n k   P_k      Poisson")
for k, (a, b) in enumerate(zip(p, ref)):
    print(f"{k:2d}  {a:.5f}  {b:.5f}")

# Q of mode a, from the state and from the Bessel closed form
print("\n|zeta|  Q(state)   Q(closed)")
for z in np.linspace(0.25, 2.5, 10):
    psi = states.make_bipair_coupled(z, 0, 0, 0, cg="formula")
    print(f"{z:5.2f}  {stats.mandel_q_numeric(psi):+.6f}  {stats.mandel_q_closed(z):+.6f}")

# Q is negative only below this point
print("\nsign change at |zeta| =", stats.q_zero_crossing())
