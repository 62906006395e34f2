"""
Maximum likelihood on a simulated path
======================================
"""
import numpy as np

from ifshmm import mle_fit, simulate
from ifshmm.fixtures import m2_family

family = m2_family()
truth = family.theta0()
obs = simulate(family.build(truth), 2000, seed=7)

start = truth.with_values(truth.values + 0.3)
fit = mle_fit(family, obs, start)
print(fit.summary())

z = (fit.theta_hat.values - truth.values) / fit.std_errors
print("standardized errors:", np.round(z, 3))

for row in fit.trace[:5]:
    print(row["iteration"], round(row["log_lik"], 4), row["score_norm"])
print("...")
print(fit.trace[-1])
