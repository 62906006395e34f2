"""
Score by the tangent filter and two routes to the observed information
======================================================================
"""
import numpy as np

from ifshmm import fd_score, observed_information, score, simulate
from ifshmm.fixtures import m2_family, one_state_family

model = m2_family().build()
obs = simulate(model, 49, seed=7)
print(model.theta.names)
print("tangent :", score(model, obs))
print("FD      :", fd_score(model, obs))

a = observed_information(model, obs, method="analytic-fd")
b = observed_information(model, obs, method="full-fd")
print(a.matrix)
print("max route difference", np.abs(a.matrix - b.matrix).max())
print("min eigenvalue", a.min_eigenvalue())

# one state, unit variance: information about mu is the number of observations
single = one_state_family(0.0).build()
seq = simulate(single, 49, seed=1)
print(len(seq), observed_information(single, seq).matrix[0, 0])
