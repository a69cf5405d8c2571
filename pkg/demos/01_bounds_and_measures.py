"""
Bounding the lost-sales fraction of an (r, q) system
=====================================================

A shop reorders q units whenever its inventory position drops to r. Demand
is Poisson, one unit at a time, the lead time is fixed, and a customer who
finds the shelf empty walks away. The exact long-run fraction of customers
lost, gamma, has no closed form once several orders can be outstanding, but
it is squeezed between two cheap expressions.
"""

# %%
from lostsales import SystemParams, bounds, gamma_from_measure, measures_from_gamma

# 1 unit/day demand, 1 day lead time, reorder at 2 units, order 2 at a time.
p = SystemParams(r=2, q=2, lam=1.0, tau=1.0)
b = bounds(p)
print(f"mean lead-time demand x = {p.x}")
print(f"lower bound on gamma  {b.lb:.6f}   (service level <= {1 - b.lb:.4%})")
print(f"upper bound on gamma  {b.ub:.6f}   (service level >= {1 - b.ub:.4%})")

# %%
# With q = 1 the upper bound is the Erlang loss formula and is exact;
# with r < q only one order is ever outstanding and the lower bound is exact.
for r, q in [(3, 1), (2, 5), (6, 2)]:
    b = bounds(SystemParams.from_x(r, q, 3.0))
    print(f"r={r} q={q}:  {b.lb:.5f} <= gamma <= {b.ub:.5f}   gap {b.gap:.5f}")

# %%
# gamma fixes every other long-run average: on-hand stock L, inventory
# position P, and units on order U. Turn the bounds on gamma into bounds on L.
lo = measures_from_gamma(b.lb, SystemParams.from_x(6, 2, 3.0))
hi = measures_from_gamma(b.ub, SystemParams.from_x(6, 2, 3.0))
print(f"average on-hand stock between {min(lo.L, hi.L):.4f} and {max(lo.L, hi.L):.4f}")

# %%
# Going the other way: an observed average pipeline of 0.97 units means
# 3% of sales are lost when x = 1.
print(gamma_from_measure("U", 0.97, p))
