"""
Choosing a reorder point for a guaranteed service level
=======================================================

Because the upper bound on gamma is guaranteed, the smallest r that pushes it
under a target gives a reorder point that is safe without simulating.
"""

# %%
from lostsales import SystemParams, bounds
from lostsales.experiments import search_min_r

x, q = 20.0, 8
for target in (0.10, 0.05, 0.01, 0.001):
    r = search_min_r(q, x, target)
    b = bounds(SystemParams.from_x(r, q, x))
    print(f"lose at most {target:6.1%}:  r = {r:3d}   ({b.lb:.5f} <= gamma <= {b.ub:.5f})")
