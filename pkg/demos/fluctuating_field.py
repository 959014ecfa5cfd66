"""
A classical distribution seen as a fluctuating field
====================================================

A Gaussian phase-space distribution on one site is turned into a complex
wave function by Fourier transforming in the momentum variable. The
fluctuating field phi = sigma + zeta/2 then has a larger spread than sigma,
and the extra part is the roughness of the distribution in pi.
"""

import numpy as np

from fluctfield import default_grid, make_gaussian_q
from fluctfield.observables import (commutator_apply, dispersion_decomposition, expect_quantum,
                                    p_hat, phi_hat, pi_hat, sigma_hat, zeta_hat)
from fluctfield.spectral import fourier_pi_to_zeta, selection_rule_violation

# a state with unequal widths, so that sigma and pi spreads are distinguishable
ws, wp = 0.8, 0.5
grid = default_grid(ws, wp, count=96, span=12)
q = make_gaussian_q(grid, 0.4, -0.2, ws, wp)

psi = fourier_pi_to_zeta(q)
print("norm of psi            ", psi.norm_sq())
print("selection-rule defect  ", selection_rule_violation(psi))

# <zeta> vanishes for every real q; <zeta^2> measures how sharply q varies in pi
print("<zeta>                 ", expect_quantum(psi, zeta_hat()))
print("<zeta^2>               ", expect_quantum(psi, [zeta_hat(), zeta_hat()]), " Gaussian value", 1 / (4 * wp**2))

# the fluctuating field inherits the classical mean but not the classical variance
d = dispersion_decomposition(q)
print("<phi>                  ", expect_quantum(psi, phi_hat()))
print("Var(sigma)             ", d.var_sigma)
print("Var(phi)               ", d.var_phi, " = Var(sigma) + <zeta^2>/4 up to", d.defect)

# commutators act on the wave function as differential operators
v = psi.values
for name, a, b, expected in [("[sigma, pi]", sigma_hat(), pi_hat(), 0.0),
                             ("[phi, pi]", phi_hat(), pi_hat(), 0.5j),
                             ("[phi, p]", phi_hat(), p_hat(), 1j)]:
    c = commutator_apply(a, b, psi).values
    print(f"{name:12s} residual against {expected!s:6s}", np.abs(c - expected * v).max())
