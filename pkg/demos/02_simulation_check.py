"""
Checking the bounds by simulation
=================================

The simulator plays the system forward one customer at a time and reports
time averages with 95% batch-means half-widths. Its estimate of the lost
fraction should land between the two bounds.
"""

# %%
from lostsales import SystemParams, bounds
from lostsales.simulator import SimConfig, simulate, validate_theorem1

p = SystemParams(r=8, q=3, lam=8.0, tau=1.0)
est = simulate(SimConfig(p, n_demands=200_000, seed=42))
b = bounds(p)
hw = est.half_widths["gamma_lost"]
print(f"lower bound {b.lb:.4f}  simulated {est.gamma_lost:.4f} +/- {hw:.4f}  upper bound {b.ub:.4f}")

# %%
# Poisson arrivals see time averages, so the fraction of customers lost and
# the fraction of time out of stock agree; the average stock levels obey the
# linear relations with gamma.
for check in validate_theorem1(est, p).checks:
    flag = "ok " if check.passed else "BAD"
    print(f"{flag} {check.name:5s} observed {check.observed:.5f} expected {check.expected:.5f}")
