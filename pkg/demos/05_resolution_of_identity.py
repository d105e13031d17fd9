"""
Resolution of the identity
==========================

Pair coherent states are overcomplete. With the measure built from
I_q(2r) K_q(2r) the weighted integral returns the identity on each sector.
"""

from bipair import specfun, states

for q in (0, 2, 5):
    diag = [states.completeness_diagonal(q, n) for n in range(6)]
    print(f"q={q}:", " ".join(f"{d:.12f}" for d in diag))

# off-diagonal elements vanish by the angular integral
print("q=1, <2|..|3>:", states.completeness_element(1, 2, 3))

# the ingredients
print("I_1(2) =", specfun.bessel_i(1, 2.0).real, " K_1(2) =", specfun.bessel_k(1, 2.0))
