"""
Geometry of the cusp
====================

Walk along the bifurcation axis and watch one equilibrium split into
three.  The discriminant ``27 alpha^2 - 4 beta^3`` changes sign exactly
where that happens, and the stationary density turns bimodal.
"""

import math

import numpy as np

from catastrank.cusp_model import CuspParams, density, discriminant, equilibria, log_normalizer

# With no asymmetry the potential is even, so the split is symmetric.
for beta in (-2.0, 0.0, 1.0, 3.0):
    p = CuspParams(0.0, beta)
    eq = equilibria(p)
    roots = ", ".join(f"{r:+.4f} ({s})" for r, s in zip(eq.roots, eq.stability))
    print(f"beta={beta:+.1f}  delta={discriminant(p):+9.3f}  {roots}")

# A little asymmetry tilts the potential; past the fold on the bifurcation
# set one of the two wells disappears.
beta = 3.0
alpha_fold = 2.0 * (beta / 3.0) ** 1.5
for alpha in (0.0, 0.5 * alpha_fold, alpha_fold, 1.5 * alpha_fold):
    eq = equilibria(CuspParams(alpha, beta))
    print(f"alpha={alpha:.3f}: {len(eq)} equilibria, stable at "
          + ", ".join(f"{r:+.3f}" for r in eq.stable))

# The density is exp(-V)/psi.  psi(0, 0) has a closed form, a handy check.
print("log psi(0,0) =", log_normalizer(CuspParams(0, 0)))
print("closed form  =", math.log(2 ** -0.5 * math.gamma(0.25)))

# Coarse text histogram of the bimodal density at beta = 3.
p = CuspParams(0.0, 3.0)
lp = log_normalizer(p)
for y in np.linspace(-3, 3, 13):
    print(f"{y:+.1f} " + "#" * int(60 * density(y, p, lp)))
