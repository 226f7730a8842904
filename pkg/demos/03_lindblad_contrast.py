"""
Decoherence versus collapse
===========================

Dephasing in the measured basis keeps populations and kills coherences.
The collapse flow does the opposite: it moves populations while every
off-diagonal phase stays put, and a pure state stays pure.
"""

import numpy as np

from weakcollapse import IntegratorParams, ProjectorSet, integrate_master, integrate_trajectory
from weakcollapse.lindblad import check_collapse_identities
from weakcollapse.quantum import density, random_pure_state

rng = np.random.default_rng(3)
rho0 = density(random_pure_state(3, rng))
basis = ProjectorSet.computational(3)
params = IntegratorParams(ds=1e-3, duration=2.0, sample_every=500)

deph = integrate_master(rho0, ls=list(basis.matrices), params=params)
coll = integrate_trajectory(rho0, basis[0], params=params)

print("   s   | dephasing: diag            purity | collapse: diag             purity  arg(rho01)")
for i, s in enumerate(deph.s):
    dd = np.round(deph.rho[i].diagonal().real, 4)
    cd = np.round(coll.rho[i].diagonal().real, 4)
    print(f" {s:4.1f}  | {dd}  {deph.purity[i]:.4f} | {cd}  {coll.purity[i]:.4f}  {np.angle(coll.rho[i, 0, 1]):+.6f}")

# For pure states the collapse generator is -2 D[rho] P exactly.
rep = check_collapse_identities(rho0, basis[0])
print("pure-state identity residual:", rep.pure_residual)
