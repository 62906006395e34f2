"""
Same consecutive filters, different score increments
====================================================
"""
from ifshmm import simulate
from ifshmm.diagnostics import score_system_check
from ifshmm.fixtures import m2_family

model = m2_family().build()
obs = simulate(model, 20, seed=3)
rep = score_system_check(model, obs)
print(rep.status, rep.reason)
print("increment gap", rep.increment_gap)
print("fd residual", rep.fd_residual)
