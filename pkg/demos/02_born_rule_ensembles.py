"""
Which weights reproduce the Born rule?
======================================

The same qubit, rho00 = 0.6, is evolved under two weighting rules. Freezing
the weights at their initial Born values and sampling one branch per
trajectory gives Born statistics. Feeding back the instantaneous populations
makes the flow deterministic: every trajectory ends in the larger branch.
"""

import numpy as np

from weakcollapse import IntegratorParams, ProjectorSet, WeightStrategy, run_ensemble
from weakcollapse.quantum import density, normalize

rho0 = density(normalize([np.sqrt(0.6), np.sqrt(0.4)]))
basis = ProjectorSet.computational(2)
params = IntegratorParams(ds=1e-2, duration=15.0)

frozen = run_ensemble(10_000, rho0, basis, WeightStrategy.frozen_born(), params, seed=12345)
print("frozen-born:         frequencies", frozen.frequencies, "z", np.round(frozen.z_scores, 2))

inst = run_ensemble(100, rho0, basis, WeightStrategy.instantaneous_born(), params, seed=12345)
print("instantaneous-born:  frequencies", inst.frequencies, "(Born says 0.6 / 0.4)")

# With weak white noise on the weights a few trajectories cross over, but the
# statistics are still far from Born's. Much larger epsilon at this step size
# makes the per-step kick epsilon / sqrt(ds) too big for the integrator, and
# the positivity guard aborts the run.
noisy_params = IntegratorParams(ds=1e-2, duration=10.0, method="stochastic")
noisy = run_ensemble(100, rho0, basis, WeightStrategy.noisy(0.1), noisy_params, seed=12345)
print("noisy (eps=0.1):     frequencies", noisy.frequencies)
