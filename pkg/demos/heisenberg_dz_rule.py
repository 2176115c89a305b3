"""Multiplication by z on the Heisenberg group is a differential operator of order 2, not 1.

The plain Leibniz rule for z misses the cross terms x*y - y*x coming from
the group law; its residual stalls under refinement while the corrected
rule converges at second order.

Run: python3 demos/heisenberg_dz_rule.py
"""
from opcalc import heisenberg as hb

st = hb.dz_refinement_study((12, 16, 24, 32))
print(f"{'N':>4} {'h':>7} {'with cross terms':>17} {'without':>10}")
for N, _, h, good, bad in st.rows:
    print(f"{N:4d} {h:7.3f} {good:17.2e} {bad:10.2e}")
print("refinement factors per doubling of N (z-step halved):", ", ".join(f"{f:.2f}" for f in st.factors))
