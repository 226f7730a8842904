"""
Collapse along a single trajectory
==================================

A qubit in |+> is measured continuously with outcome projector |0><0|. The
state slides along a geodesic toward |0>, stays pure the whole way, and the
two ways of measuring "distance to the end point" decay at different rates.
"""

import numpy as np

from weakcollapse import IntegratorParams, convergence_exponent, integrate_trajectory
from weakcollapse.collapse import geodesic_map_pure
from weakcollapse.quantum import density, ket, plus_state

p = density(ket(0, 2))
params = IntegratorParams(ds=1e-3, duration=12.0, sample_every=100)
rec = integrate_trajectory(density(plus_state()), p, params=params)

# The population of |0> follows the logistic curve 1 / (1 + e^{-2s}).
for s in (0.0, 0.5, 1.0, 2.0, 4.0):
    i = int(np.argmin(np.abs(rec.s - s)))
    print(f"s={s:4.1f}  rho00={rec.rho[i, 0, 0].real:.10f}  logistic={1 / (1 + np.exp(-2 * s)):.10f}")

print("max |purity - 1| along the run:", np.max(np.abs(rec.purity - 1)))

# The geodesic map reaches the same states without integrating.
print("geodesic at t=1/2:", np.round(geodesic_map_pure(plus_state(), p, 0.5), 6))

# Populations relax like e^{-2s}, coherences like e^{-s}. The Frobenius
# distance is dominated by the slower coherences.
print("population exponent:", round(convergence_exponent(rec, p, metric="population"), 4))
print("frobenius exponent: ", round(convergence_exponent(rec, metric="frobenius"), 4))
