"""
Why the naive operator composition fails
========================================

Two ways to push a function through one observation step.  Only the
transposed one reproduces the joint density.
"""
import numpy as np

from ifshmm import fuh_scalar_chain, joint_density_bruteforce, joint_density_via_composition
from ifshmm.diagnostics import operator_mismatch_report
from ifshmm.fixtures import m2_family, symmetric_family

m2 = m2_family().build()
print("P =\n", m2.P)
print("pi =", m2.pi)

obs = [0.0, 0.0]
true = joint_density_bruteforce(m2, obs)
print("brute force      ", true)
print("corrected chain  ", joint_density_via_composition(m2, obs))
print("forward kernel   ", fuh_scalar_chain(m2, obs))

# with a symmetric doubly stochastic kernel P == P.T and the two agree
sym = symmetric_family(3, stay=0.6).build()
rng = np.random.default_rng(0)
xi = rng.normal(size=5)
print("symmetric:", fuh_scalar_chain(sym, xi), joint_density_via_composition(sym, xi))

report = operator_mismatch_report(m2, [[0.0, 0.0], [1.0, -0.5, 0.3]], "M2")
print(report.columns)
for row in report.rows:
    print(row)
