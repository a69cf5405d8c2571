"""
How tight are the bounds?
=========================

Aggregate the gap between the bounds over q = 2..r for a grid of reorder
points and demand levels x = K r, then find the worst gap for each r.
"""

# %%
from lostsales import experiments as ex

rows = ex.table2()
print(" r     K   avg UB SL%  avg LB SL%  max diff")
for row in rows:
    if row.K == 1.0:
        print(f"{row.r:4d} {row.K:5.2f} {row.avg_ub_sl_pct:11.4f} {row.avg_lb_sl_pct:11.4f} {row.max_diff:9.4f}")

print("mismatches against the published values:", ex.compare_table2(rows))

# %%
# Worst gap over K in [0.5, 1.5] and every q, for r up to 40.
points = ex.figure1(r_max=40)
worst = max(points, key=lambda pt: pt.worst_gap)
print(f"largest gap {worst.worst_gap:.4f} at r={worst.r}, K={worst.worst_K}, q={worst.worst_q}")
for pt in points[::6]:
    print(f"r={pt.r:3d}  worst gap {pt.worst_gap:.4f}  " + "#" * int(pt.worst_gap * 600))
