"""
Normalized filter vs unnormalized mass
======================================
"""
import numpy as np

from ifshmm import run_filter, simulate
from ifshmm.diagnostics import degeneracy_report
from ifshmm.fixtures import LOG_PHI0, m2_family

model = m2_family().build()
obs = simulate(model, 200, seed=7)
run = run_filter(model, obs)

for t in (0, 10, 50, 100, 200):
    print(f"t={t:4d}  filter={run.filters[t]}  log mass={run.log_mass[t]:9.3f}")

# the mass itself would be exp(-294) by the end; linear space gives up long before
print("exp(log mass) at 200:", np.exp(run.log_mass[-1]))

rep = degeneracy_report(model, n=200, seed=7)
print("slope", rep.slope, "bound", LOG_PHI0, "holds:", rep.bound_holds)
