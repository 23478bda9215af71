"""The alternative p-value law and the population model.

Walks through the building blocks every other capability rests on: the
inverse-square alternative density, the two-component mixture, and the
derived constants (criticality level, population thresholds, boundary
constant).
"""

from fractions import Fraction

import numpy as np

from depfdr import InverseSquareAlternative, PopulationModel, reference_model

# The alternative law concentrates p-values near 0: with a = 1/98 the
# density starts at 100 and falls to exactly 0 at 1.
alt = InverseSquareAlternative(Fraction(1, 98))
print("density at 0:", alt.density(0.0))
print("density at 1:", alt.density(1.0))
print("CDF at 0.1:  ", alt.cdf(0.1))

# quantile is the exact inverse of the CDF
u = np.linspace(0.0, 1.0, 11)
x = alt.quantile(u)
print("max |G(G^-1(u)) - u| on a grid:", np.max(np.abs(alt.cdf(x) - u)))

# The population model mixes uniform nulls with the alternative.
model = reference_model(alpha=0.1)
print("\nmixture CDF at 0.05:", model.cdf(0.05))
print("criticality level 1/f(0):", model.critical_alpha, "= 2/101 exactly:",
      model.critical_alpha == 2 / 101)

# Above the criticality level the step-up threshold converges to a positive
# root; below it, to zero (bounded rejections).
print("\npopulation threshold at alpha=0.1:", model.bh_limit, "(= 1/23)")
print("plug-in population threshold:      ", model.plugin_limit)
low = reference_model(alpha=0.01)
print("population threshold at alpha=0.01:", low.bh_limit)

# The boundary-law constant governs the cube-root limit at alpha = alpha*.
print("\nboundary constant c0:", model.boundary_constant())

# Models with other null fractions use the grid-scan root finder.
skewed = PopulationModel(pi0=0.8, alternative=alt, alpha=0.1)
print("threshold root at pi0=0.8:", skewed.threshold_root(1.0))
