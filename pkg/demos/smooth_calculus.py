"""f(a) for a Hermitian matrix three ways: eigendecomposition, Riemann sums, Cauchy contour.

Run: python3 demos/smooth_calculus.py
"""
import numpy as np

from opcalc.algebra import Contour, norm, oracle_holo_calc, oracle_smooth_calc, random_normal
from opcalc.funcalc import SampledFunction, bump, holo_calc, smooth_calc_self_adjoint

rng = np.random.default_rng(1)
a = random_normal(8, rng, 1.0, real_spectrum=True)
f = SampledFunction(lambda x: np.sin(np.pi * x / 2) * bump(x), 2.5, name="sin(pi x/2)*bump")

exact = oracle_smooth_calc(a, f.fn)
print("Riemann-sum engine against the eigendecomposition oracle")
print(f"{'n':>4} {'error':>10}")
for n in (8, 16, 32, 64):
    print(f"{n:4d} {norm(smooth_calc_self_adjoint(a, f, n_max=n) - exact):10.2e}")

# holomorphic branch on a non-normal matrix: a 3x3 Jordan block at 0.3
J = 0.3 * np.eye(3) + np.diag([1.0, 1.0], 1)
C = Contour.enclosing(J, n=128)
g = lambda z: np.exp(z) - 1
err = norm(holo_calc(J, g, C) - oracle_holo_calc(J, g, C))
print(f"\ncontour engine vs direct resolvent solve on a Jordan block: {err:.2e}")
