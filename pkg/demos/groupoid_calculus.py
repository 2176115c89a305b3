"""Smooth functional calculus of a Schwartz kernel on the tangent groupoid of the circle.

f(a) is computed slice by slice (eigendecomposition at t > 0, Fourier
multiplier at t = 0) and by the generic Riemann-sum engine; then the
Schwartz seminorms of f(a) are compared between N and 2N.

Run: python3 demos/groupoid_calculus.py   (about a minute)
"""
import numpy as np

from opcalc.groupoid.corpus import GridSpec, by_name
from opcalc.groupoid.seminorms import seminorm_table
from opcalc.groupoid.theorem_a import default_functions, normalize, oracle_calc, theoremA_check

spec = GridSpec(N=32, V=8.0, Nv=128)
e = by_name("gauss-a1")
a = normalize(e.kernel(*spec.build()))
b = normalize(e.kernel(*spec.doubled().build()))
f = default_functions()[0]

rep, = theoremA_check(a, [f], n=24, a_refined=b, depth=1)
print(f"f = {f.name}: oracle vs engine, C*-norm of the difference {rep.cross_residual:.2e}")

ta, tb = seminorm_table(oracle_calc(a, f.fn), 1), seminorm_table(oracle_calc(b, f.fn), 1)
print(f"\n{'word':8s} {'N=32':>10} {'N=64':>10}")
for w in ta:
    print(f"{w:8s} {ta[w]:10.4g} {tb[w]:10.4g}")
print(f"\nworst ratio {rep.seminorms.worst_ratio:.3f} ({rep.seminorms.worst_word}); finite: {rep.seminorms.finite}")
