"""Build differential operators from commutators and multipliers; watch the orders and bounds.

Run: python3 demos/leibniz_certificates.py
"""
import numpy as np

from opcalc import leibniz as lz
from opcalc import pushforward as pf
from opcalc.algebra import norm, random_hermitian

rng = np.random.default_rng(0)
D, E = random_hermitian(6, rng), random_hermitian(6, rng)
ad_D, ad_E = lz.commutator(D, tag="ad_D"), lz.commutator(E, tag="ad_E")
certs = {
    "left multiplier": lz.left_multiplication(D),
    "commutator": ad_D,
    "sum": lz.sum_certificates(ad_D, ad_E),
    "composition": lz.compose_certificates(ad_D, ad_E),
}
pairs = [(rng.standard_normal((6, 6)), rng.standard_normal((6, 6))) for _ in range(5)]

x = random_hermitian(6, rng)
x = x / norm(x)
print(f"{'certificate':16s} {'order':>5} {'Leibniz residual':>17} {'fitted l':>9}")
for name, c in certs.items():
    res = lz.check_leibniz_sample(c, pairs).max_residual
    fit = pf.fit_power_bound(c, pf.DerivationTrace([x]).record(c), m_max=40)
    print(f"{name:16s} {c.order:5d} {res:17.2e} {fit.order_estimate:9.2f}")
# the fitted growth exponent of |delta(x^m)| stays below the declared order
