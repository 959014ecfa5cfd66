"""
Integrating out the mirror field
================================

For constant fields the mirror field can be eliminated at its stationary
point order by order in phi. The resulting correction starts at phi^6.
The one-loop term instead produces a phi^4 piece that grows like
1/eps^2 as the lattice spacing shrinks.
"""

import numpy as np

from fluctfield import ModelParams
from fluctfield.effective_action import (one_loop_phi4_coefficient, saddle_consistency,
                                         solve_mirror_series, tree_level_delta_s)

p = ModelParams(1.0, 1.0, 3, 0.25)
chi = solve_mirror_series(p, 15)
ds = tree_level_delta_s(chi, p, 18)
print("chi_bar(phi)   :", {k: str(v) for k, v in chi.coefficients.items()})
print("Delta S(phi)   :", {k: str(v) for k, v in ds.coefficients.items()})

print("\n  phi    series          direct          rel. dev.")
for phi in (0.05, 0.1, 0.2, 0.3, 0.6, 1.0):
    c = saddle_consistency(p, phi)
    flag = "" if c.in_validity_region else "  (outside lambda phi^2/m^2 <= 0.1)"
    print(f"{phi:5.2f}  {c.series_value:14.6e}  {c.numeric_value:14.6e}  {c.relative_deviation:9.2e}{flag}")

print("\n  eps    lattice   phi^4 coefficient per volume")
eps = np.array([0.5, 0.25, 0.125])
coeff = []
for e in eps:
    dims = (int(round(2 / e)),) * 4
    coeff.append(one_loop_phi4_coefficient(ModelParams(1.0, 1.0, 3, e), dims))
    print(f"{e:6.3f}  {dims[0]:3d}^4    {coeff[-1]:.5e}")
print("log-log slope:", np.polyfit(np.log(eps), np.log(coeff), 1)[0])
