"""
The moment ratio is unbounded
=============================

Ratio of emission densities at two hidden states (0 and 1 shifted by y and z),
scanned over growing boxes.
"""
import math

from ifshmm.diagnostics import c5_direct_ratio, c5_ratio, c5_sup_scan

scan = c5_sup_scan(0.0, 0.0, bounds=[1, 2, 3, 4, 5], step=0.1)
for B, sup in zip([1, 2, 3, 4, 5], scan.suprema):
    print(B, sup, math.exp(B * B))

print(c5_ratio(0.7, -0.2, 0.3, 1.1), c5_direct_ratio(0.7, -0.2, 0.3, 1.1))

# nonzero observations move the maximizer but the supremum still blows up
print(c5_sup_scan(0.5, 1.0, bounds=[1, 2, 3], step=0.25).suprema)
