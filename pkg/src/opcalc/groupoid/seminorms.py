"""Schwartz seminorms: generator words, the coordinate clauses, finiteness verdicts."""
import itertools
from dataclasses import dataclass, field

import numpy as np

from ..algebra import AlgebraError
from .grid import log_derivative_at
from .kernel import mult_t
from .operators import (COS, DTHETA, STANDARD_FRAME, delta_D, hat_delta, lift_left, multiply_dnc)

DEPTH_CAP = 4

GENERATORS = {
    "t": mult_t,
    "D": lambda f: lift_left(DTHETA, f),
    "dcos": lambda f: multiply_dnc(COS, f),
    "dD": lambda f: delta_D(DTHETA, f),
    "hat": lambda f: hat_delta(f, STANDARD_FRAME),
}


@dataclass(frozen=True)
class SchwartzWord:
    """Generator tags applied left to right."""
    tags: tuple = ()

    def __post_init__(self):
        if len(self.tags) > DEPTH_CAP:
            raise AlgebraError("depth", f"words are capped at depth {DEPTH_CAP}")
        for t in self.tags:
            if t not in GENERATORS:
                raise AlgebraError("word", f"unknown generator {t!r}")

    def __str__(self):
        return ".".join(self.tags) or "id"

    def apply(self, f):
        for t in self.tags:
            f = GENERATORS[t](f)
        return f


def all_words(depth, generators=None):
    gens = sorted(GENERATORS) if generators is None else list(generators)
    return [SchwartzWord(w) for d in range(depth + 1) for w in itertools.product(gens, repeat=d)]


def kernel_sup(f):
    """Sup over stored slices; a zero slice extrapolated from coarse slices is left out.

    Such a zero slice is a limit of t > 0 values, so the sup over t > 0
    already bounds it, and dropping it does not hide growth.
    """
    s = float(np.max(np.abs(f.slices)))
    return s if f.meta.get("zero_extrapolated") else max(s, float(np.max(np.abs(f.zero))))


def schwartz_seminorm(f, word):
    w = word if isinstance(word, SchwartzWord) else SchwartzWord(tuple(word))
    return kernel_sup(w.apply(f))


def seminorm_table(f, depth=2, generators=None):
    """{word string: seminorm} for every word up to ``depth``, sharing prefixes."""
    memo = {(): f}
    out = {}
    for w in all_words(depth, generators):
        k = memo.get(w.tags)
        if k is None:
            k = memo[w.tags] = GENERATORS[w.tags[-1]](memo[w.tags[:-1]])
        out[str(w)] = kernel_sup(k)
    return out


@dataclass
class FinitenessReport:
    finite: bool
    worst_word: str
    worst_ratio: float
    base: dict = field(repr=False)
    other: dict = field(repr=False)


def compare_tables(base, other, rel=0.10, floor=1e-8):
    """Finite when every seminorm agrees between two grids within ``rel``.

    Values below ``floor`` times the largest entry on both grids count as
    agreeing (they are at round-off level).
    """
    scale = max(max(base.values()), max(other.values()), 1e-300)
    worst, wr = "", 1.0
    for k in base:
        a, b = base[k], other[k]
        if not (np.isfinite(a) and np.isfinite(b)):
            return FinitenessReport(False, k, np.inf, base, other)
        if max(a, b) <= floor * scale:
            continue
        r = max(a, b) / max(min(a, b), 1e-300)
        if r > wr:
            worst, wr = k, r
    return FinitenessReport(wr <= 1 + rel, worst, float(wr), base, other)


def zero_slice_moments(f, kmax=3, lmax=3):
    """max_x sup_v |v^k d_v^l F(v, x)| for k, l <= 3 (F must be Schwartz on each fibre)."""
    v = f.vgrid.v[:, None]
    out = np.zeros((kmax + 1, lmax + 1))
    D = f.zero
    for l in range(lmax + 1):
        if l:
            D = f.vgrid.derivative(D)
        for k in range(kmax + 1):
            out[k, l] = np.max(np.abs(v ** k * D))
    return out


def vanishing_proxy(f):
    """sup of |F| over the outer tenth of the v-box, relative to sup |F|."""
    v = np.abs(f.vgrid.v)
    outer = v >= 0.9 * f.vgrid.V
    return float(np.max(np.abs(f.zero[outer])) / max(np.max(np.abs(f.zero)), 1e-300))


# --------------------------------------------------- coordinate clauses

def _fd(values, h, axis, order):
    # 4th-order periodic central differences (local, so an unresolved diagonal stays local)
    for _ in range(order):
        values = (8 * (np.roll(values, -1, axis) - np.roll(values, 1, axis))
                  - (np.roll(values, -2, axis) - np.roll(values, 2, axis))) / (12 * h)
    return values


def _t_derivs(S, t, l):
    # d^l/dt^l from the log-t stencil: d/dt = (1/t) T, d^2/dt^2 = (T^2 - T)/t^2
    if l == 0:
        return S(t)
    T = lambda s: log_derivative_at(S, s)
    if l == 1:
        return T(t) / t
    return (log_derivative_at(T, t) - T(t)) / t ** 2


def _chart_t_fit(f, t_hi=0.1, nodes=9):
    """Chebyshev interpolant in t of the chart data on [0, t_hi]; derivatives are then stable."""
    tj = 0.5 * t_hi * (1 - np.cos(np.pi * np.arange(nodes) / (nodes - 1)))
    vals = np.array([f.chart_at(t) for t in tj])
    shape = vals.shape[1:]
    coef = np.polynomial.chebyshev.chebfit(2 * tj / t_hi - 1, vals.reshape(nodes, -1), nodes - 1)

    def deriv(t, l):
        c = np.polynomial.chebyshev.chebder(coef, l) * (2 / t_hi) ** l if l else coef
        return np.polynomial.chebyshev.chebval(2 * t / t_hi - 1, c).reshape(shape)
    return deriv


def clause_values(f, which=("clause1", "clause2", "clause3"), kmax=2, lmax=2, band=0.5,
                  t_far=(1.0, 2.0 ** -10), eta=0.02):
    """The three coordinate clause families at depth k, l <= 2.

    1. sup |t^k d_t^l D f| over slices with t >= 1, D in {1, d_y, d_x}.
    2. sup |t^{-k} d_t^l D f| for |y - x| >= band and t in (0, 1] on a geometric
       grid from t_far[0] down to t_far[1] (off the diagonal no resolution is needed).
    3. sup |v^k d_t^l d_v^a d_x^b F| (a, b <= 1) in chart coordinates for
       t in {0, eta, 2 eta, 4 eta}, over chart points x, x + t v in [-pi + band, pi - band].
    Returns {clause: {label: value}}.
    """
    if f.slice_fn is None or f.chart_fn is None:
        raise AlgebraError("sampler", "coordinate clauses need slice and chart samplers")
    grid, vg = f.grid, f.vgrid
    h = 2 * np.pi / grid.N
    D_ops = {"1": lambda A: A, "dy": lambda A: _fd(A, h, 0, 1), "dx": lambda A: _fd(A, h, 1, 1)}
    out = {}
    if "clause1" in which:
        c1 = out["clause1"] = {}
        big = [t for t in f.ts if t >= 1.0]
        for l in range(lmax + 1):
            for dn, Dop in D_ops.items():
                vals = [np.max(np.abs(Dop(_t_derivs(f.slice_at, t, l)))) for t in big]
                for k in range(kmax + 1):
                    c1[f"k{k}l{l}{dn}"] = max(t ** k * v for t, v in zip(big, vals))
    if "clause2" in which:
        c2 = out["clause2"] = {}
        dist = np.abs(np.angle(np.exp(1j * (grid.theta[:, None] - grid.theta[None, :]))))
        far = dist >= band
        ts = t_far[0] * 2.0 ** -np.arange(int(round(np.log2(t_far[0] / t_far[1]))) + 1)
        for l in range(lmax + 1):
            for dn, Dop in D_ops.items():
                vals = [np.max(np.abs(Dop(_t_derivs(f.slice_at, t, l))[far])) for t in ts]
                for k in range(kmax + 1):
                    c2[f"k{k}l{l}{dn}"] = max(v * t ** -k for t, v in zip(ts, vals))
    if "clause3" in which:
        c3 = out["clause3"] = {}
        deriv = _chart_t_fit(f)
        v = vg.v[:, None]
        xc = np.angle(np.exp(1j * grid.theta))[None, :]
        for t in (0.0, eta, 2 * eta, 4 * eta):
            mask = (np.abs(xc) <= np.pi - band) & (np.abs(xc + t * v) <= np.pi - band)
            for l in range(lmax + 1):
                Fa = deriv(t, l)
                for a in range(2):
                    if a:
                        Fa = vg.derivative(Fa)
                    Fab = Fa
                    for b in range(2):
                        if b:
                            Fab = grid.derivative(Fab, axis=1)
                        for k in range(kmax + 1):
                            key = f"k{k}l{l}a{a}b{b}"
                            c3[key] = max(c3.get(key, 0.0), float(np.max(np.abs(v ** k * Fab)[mask])))
    return out


def remark_seminorms(f_base, f_other, rel=0.10, floor=1e-4):
    """Clause verdicts.

    Clauses 1 and 3 compare ``f_base`` with its counterpart on extended grids
    (larger t-range and v-box); clause 2 extends the same kernel downward in t
    (2^-5 vs 2^-10), where off-diagonal values need no resolution.
    """
    a = clause_values(f_base, t_far=(1.0, 2.0 ** -5))
    b = clause_values(f_other, ("clause1", "clause3"))
    b.update(clause_values(f_base, ("clause2",), t_far=(1.0, 2.0 ** -10)))
    return {c: compare_tables(a[c], b[c], rel, floor) for c in ("clause1", "clause2", "clause3")}
