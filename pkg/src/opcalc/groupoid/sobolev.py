"""Sup-norm versus C*-norm comparison and the mode-sum lemma behind it."""
import math
from dataclasses import dataclass, field

import numpy as np

from ..algebra import AlgebraError
from .operators import LAPLACIAN


@dataclass
class SobolevReport:
    lhs: float              # sup |f|
    rhs: float              # C*-norm estimate of (1 + t)(1 + D-lift)^k * f * (1 + D-lift)^k
    ratio: float
    per_slice: np.ndarray = field(repr=False, default=None)


def sobolev_rhs(f, k=1):
    """max over slices of (1 + t) ||pi_t((1 + t^2 L)^k K (1 + t^2 L)^k)||, with the zero slice
    sup_{x, xi} (1 + xi^2)^{2k} |F_hat(xi, x)| (L = -d^2, principal symbol xi^2 at t = 0)."""
    if k < 1:
        raise AlgebraError("domain", "k must be >= 1")
    L = LAPLACIAN.matrix(f.grid)
    I = np.eye(f.N)
    per = []
    for t, K in zip(f.ts, f.slices):
        P = np.linalg.matrix_power(I + t * t * L, k)
        per.append((1 + t) * f.grid.weight / t * np.linalg.norm(P @ K @ P, 2))
    xi = f.vgrid.xi[:, None]
    zero = float(np.max((1 + xi ** 2) ** (2 * k) * np.abs(f.vgrid.transform(f.zero))))
    per.append(zero)
    return float(max(per)), np.array(per)


def sobolev_ratio(f, k=1):
    lhs = f.sup()
    rhs, per = sobolev_rhs(f, k)
    if rhs == 0:
        return SobolevReport(lhs, 0.0, 0.0 if lhs == 0 else math.inf, per)
    return SobolevReport(lhs, rhs, lhs / rhs, per)


def sobolev_bound_check(kernels, k=1):
    """Fit one C = max ratio over ``kernels``; returns (C, reports)."""
    reps = [sobolev_ratio(f, k) for f in kernels]
    return max(r.ratio for r in reps), reps


# --------------------------------------------------------- mode sums

def mode_sum_closed(t):
    """(1/2 pi) sum_{m in Z} (1 + t^2 m^2)^{-2} from the partial-fraction closed form.

    With b = 1/t: sum_m (m^2 + b^2)^{-2} = pi coth(pi b)/(2 b^3) + pi^2 csch^2(pi b)/(2 b^2).
    """
    b = 1.0 / t
    x = math.pi * b
    coth = 1.0 / math.tanh(x)
    csch2 = 0.0 if x > 350 else 1.0 / math.sinh(x) ** 2
    s = math.pi * coth / (2 * b ** 3) + math.pi ** 2 * csch2 / (2 * b ** 2)
    return b ** 4 * s / (2 * math.pi)


def mode_sum_direct(t, k=1, terms=None):
    """(1/2 pi) sum_{|m| <= M} (1 + t^2 m^2)^{-2k} plus the integral tail beyond M."""
    M = int(terms or max(4096, 2 ** 12 / t))
    m = np.arange(1, M + 1, dtype=float)
    s = 1.0 + 2.0 * np.sum((1.0 + (t * m) ** 2) ** (-2 * k))
    # int_{M+1/2}^inf (t m)^{-4k} dm, twice
    tail = 2.0 * (t ** (-4 * k)) * (M + 0.5) ** (1 - 4 * k) / (4 * k - 1)
    return (s + tail) / (2 * math.pi)


def dirac_lemma_check(ts=None, k=1):
    """For each t: direct sum, closed form (k = 1) and the ratio to max(1/t, 1).

    The lemma says the squared L^2 norm of the smoothed Dirac mass at x is
    at most C^2 max(t^{-1}, 1); the fitted C^2 is the largest ratio.
    """
    ts = 2.0 ** -np.arange(11) if ts is None else np.asarray(ts, dtype=float)
    rows = []
    for t in ts:
        d = mode_sum_direct(t, k)
        c = mode_sum_closed(t) if k == 1 else float("nan")
        rows.append((float(t), d, c, d / max(1.0 / t, 1.0)))
    C2 = max(r[3] for r in rows)
    return C2, rows
