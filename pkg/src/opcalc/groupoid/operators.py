"""Lifted differential operators, dnc multipliers and the derivations delta_D, delta_alpha, hat-delta."""
from dataclasses import dataclass

import numpy as np

from ..algebra import AlgebraError
from ..leibniz import LeibnizCertificate, derivation, identity
from .grid import log_derivative, log_derivative_at
from .kernel import TangentAlgebra, chart_from_slice


class CircleFunction:
    """A smooth function on the circle with its derivative (spectral when not given)."""

    def __init__(self, fn, dfn=None, name="g"):
        self.fn, self.name = fn, name
        if dfn is None:
            n = 256
            th = 2 * np.pi * np.arange(n) / n
            k = np.fft.fftfreq(n, 1.0 / n)
            k[n // 2] = 0.0
            c = np.fft.fft(np.asarray(fn(th), dtype=complex)) * 1j * k / n

            def dfn(x, c=c, k=k):
                return np.real_if_close(np.exp(1j * np.asarray(x)[..., None] * k) @ c)
        self.dfn = dfn

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def d(self, x):
        return self.dfn(np.asarray(x, dtype=float))


COS = CircleFunction(np.cos, lambda x: -np.sin(x), "cos")
SIN = CircleFunction(np.sin, np.cos, "sin")


def constant(c):
    return CircleFunction(lambda x: c + 0.0 * x, lambda x: 0.0 * x, f"{c:g}")


class CircleOperator:
    """D = sum_j a_j(theta) d^j with ``coeffs[j] = a_j`` (CircleFunction or None)."""

    def __init__(self, coeffs, name="D"):
        coeffs = list(coeffs)
        while len(coeffs) > 1 and coeffs[-1] is None:
            coeffs.pop()
        if len(coeffs) - 1 > 4:
            raise AlgebraError("order", "lifted operators have order <= 4")
        self.coeffs, self.name = coeffs, name

    @property
    def order(self):
        return len(self.coeffs) - 1

    @classmethod
    def function(cls, g, name=None):
        return cls([g], name or g.name)

    @classmethod
    def vector_field(cls, a, name=None):
        return cls([None, a], name or f"{a.name}*d")

    def matrix(self, grid):
        """The operator on grid values: sum_j diag(a_j) D^j with the spectral D."""
        N = grid.N
        out = np.zeros((N, N))
        P = np.eye(N)
        for j, a in enumerate(self.coeffs):
            if j:
                P = grid.D @ P
            if a is not None:
                out = out + np.asarray(a(grid.theta))[:, None] * P
        return out

    def apply_chart(self, F, t, grid, vgrid):
        """t^d D_y on chart data: sum_j t^{d-j} a_j(x + t v) d_v^j F (principal part at t = 0)."""
        d = self.order
        x, v = grid.theta[None, :], vgrid.v[:, None]
        out = np.zeros_like(F, dtype=complex)
        Dj = F
        for j, a in enumerate(self.coeffs):
            if j:
                Dj = vgrid.derivative(Dj)
            if a is None or (t == 0 and j < d):
                continue
            out = out + t ** (d - j) * a(x + t * v) * Dj
        return out


DTHETA = CircleOperator([None, constant(1.0)], "d")
LAPLACIAN = CircleOperator([None, None, constant(-1.0)], "-d^2")


@dataclass(frozen=True)
class Frame:
    """Functions f_i and vector fields X_i = a_i d with X = sum X(f_i) X_i."""
    functions: tuple
    fields: tuple            # coefficient functions a_i
    name: str = "frame"

    def trace(self, theta):
        """sum_i X_i(f_i)(theta); identically 1 for a frame of the circle."""
        return sum(a(theta) * f.d(theta) for f, a in zip(self.functions, self.fields))

    def reconstruct(self, a, theta):
        """sum_i X(f_i) a_i for X = a d, which should equal a."""
        return sum(a(theta) * f.d(theta) * ai(theta) for f, ai in zip(self.functions, self.fields))


STANDARD_FRAME = Frame((COS, SIN),
                       (CircleFunction(lambda x: -np.sin(x), lambda x: -np.cos(x), "-sin"), COS),
                       "cos-sin")

_C2 = CircleFunction(lambda x: np.cos(2 * x), lambda x: -2 * np.sin(2 * x), "cos2")
_S2 = CircleFunction(lambda x: np.sin(2 * x), lambda x: 2 * np.cos(2 * x), "sin2")
# X(cos 2) = -2 a sin 2, X(sin 2) = 2 a cos 2, so a_i = (-sin 2/2, cos 2/2)
SECOND_FRAME = Frame((_C2, _S2),
                     (CircleFunction(lambda x: -0.5 * np.sin(2 * x), lambda x: -np.cos(2 * x), "-sin2/2"),
                      CircleFunction(lambda x: 0.5 * np.cos(2 * x), lambda x: -np.sin(2 * x), "cos2/2")),
                     "cos2-sin2")


# --------------------------------------------------------------- dnc

def dnc_slice(g, grid, t):
    th = grid.theta
    return (g(th)[:, None] - g(th)[None, :]) / t


def dnc_chart(g, grid, vgrid, t):
    x, v = grid.theta[None, :], vgrid.v[:, None]
    if t == 0:
        return g.d(x) * v
    return (g(x + t * v) - g(x)) / t


def dnc_lift(g, like):
    """dnc(g) sampled as a kernel on the grids of ``like``."""
    grid, vg = like.grid, like.vgrid
    return like.like(np.array([dnc_slice(g, grid, t) for t in like.ts]), dnc_chart(g, grid, vg, 0.0),
                     lambda t: dnc_slice(g, grid, t), lambda t: dnc_chart(g, grid, vg, t))


def _derive(f, slice_op, chart_op):
    """Apply a t-local operation to stored data and to the samplers."""
    slices = np.array([slice_op(t, f.slice_at) for t in f.ts])
    zero = chart_op(0.0, f.chart_at)
    sf = (lambda t: slice_op(t, f.slice_at)) if f.slice_fn is not None else None
    cf = (lambda t: chart_op(t, f.chart_at)) if f.chart_fn is not None else None
    return f.like(slices, zero, sf, cf)


def multiply_dnc(g, f):
    """delta_g(f) = dnc(g) f."""
    grid, vg = f.grid, f.vgrid
    return _derive(f, lambda t, S: dnc_slice(g, grid, t) * S(t),
                   lambda t, C: dnc_chart(g, grid, vg, t) * C(t))


# ------------------------------------------------------------ lifted D

def lift_left(D, f):
    """D-lift * f: t^d D_y f for t > 0, a_d(x) d_v^d F at t = 0."""
    M, d = D.matrix(f.grid), D.order
    return _derive(f, lambda t, S: t ** d * (M @ S(t)),
                   lambda t, C: D.apply_chart(C(t), t, f.grid, f.vgrid))


def _right_chart(D, F, t, grid, vgrid):
    # f * D-lift in chart coordinates; t > 0 is written out for order <= 1
    d = D.order
    x = grid.theta[None, :]
    if t == 0:
        a = D.coeffs[d]
        return np.zeros_like(F) if a is None else a(x) * (vgrid.derivative(F, d) if d else F)
    if d > 1:
        raise AlgebraError("order", "chart form of the right action is implemented for order <= 1")
    b = D.coeffs[0]
    out = np.zeros_like(F, dtype=complex)
    if d == 1 and D.coeffs[1] is not None:
        a = D.coeffs[1]
        out = out + a(x) * vgrid.derivative(F) - t * a.d(x) * F - t * a(x) * grid.derivative(F, axis=1)
    if b is not None:
        out = out + t ** d * b(x) * F
    return out


def lift_right(D, f):
    """f * D-lift: t^d (K D) per slice; a_d(x) d_v^d F at t = 0."""
    M, d = D.matrix(f.grid), D.order
    out = _derive(f, lambda t, S: t ** d * (S(t) @ M),
                  lambda t, C: _right_chart(D, C(t), t, f.grid, f.vgrid) if (t == 0 or d <= 1) else None)
    if d > 1:
        out.chart_fn = None
    return out


def lift_diff_op(D):
    """The left action f -> D-lift * f as a callable."""
    return lambda f: lift_left(D, f)


# --------------------------------------------------------------- delta_D

def _delta_chart(D, F, t, grid, vgrid):
    x, v = grid.theta[None, :], vgrid.v[:, None]
    b = D.coeffs[0]
    out = np.zeros_like(F, dtype=complex)
    if D.order == 1 and D.coeffs[1] is not None:
        a = D.coeffs[1]
        Fv = vgrid.derivative(F)
        da = a.d(x) * v if t == 0 else (a(x + t * v) - a(x)) / t
        out = out + da * Fv + a(x) * grid.derivative(F, axis=1) + a.d(x) * F
    if b is not None:
        if D.order == 0:
            out = out + dnc_chart(b, grid, vgrid, t) * F
        elif t > 0:
            out = out + (b(x + t * v) - b(x)) * F
    return out


def delta_D(D, f):
    """(1/t)(D-lift * f - f * D-lift) for D of order <= 1."""
    if D.order > 1:
        raise AlgebraError("order", "delta_D takes functions and vector fields; compose certificates for more")
    M = D.matrix(f.grid)
    p = D.order - 1
    return _derive(f, lambda t, S: t ** p * (M @ S(t) - S(t) @ M),
                   lambda t, C: _delta_chart(D, C(t), t, f.grid, f.vgrid))


# --------------------------------------------------------- delta_alpha

def delta_alpha(f, mode="auto"):
    """-f + t d/dt f for t > 0, -F - v dF/dv at t = 0.

    ``mode='grid'`` differentiates across the stored geometric t-grid;
    ``'sampler'`` uses a 5-point stencil in log t on ``slice_fn``;
    ``'auto'`` picks the sampler when there is one.
    """
    if f.ts.size < 3:
        raise AlgebraError("grid", "delta_alpha needs at least 3 t-slices")
    if mode == "auto":
        mode = "sampler" if f.slice_fn is not None else "grid"
    v = f.vgrid.v[:, None]

    def chart_op(t, C):
        F = C(t)
        out = -F - v * f.vgrid.derivative(F)
        return out if t == 0 else out + log_derivative_at(C, t)

    if mode == "grid":
        slices = -f.slices + log_derivative(f.slices, f.ts)
        out = f.like(slices, chart_op(0.0, f.chart_at))
        if f.slice_fn is not None:
            out.slice_fn = lambda t: -f.slice_at(t) + log_derivative_at(f.slice_at, t)
        return out
    if f.slice_fn is None:
        raise AlgebraError("grid", "sampler mode needs slice_fn")
    return _derive(f, lambda t, S: -S(t) + log_derivative_at(S, t), chart_op)


# ------------------------------------------------------------ hat-delta

RICHARDSON_ETA = 0.02


def _hat_numerator_slice(f_S, t, grid, frame, dalpha):
    out = dalpha(t)
    for g, a in zip(frame.functions, frame.fields):
        M = CircleOperator.vector_field(a).matrix(grid)
        out = out + t * (M @ (dnc_slice(g, grid, t) * f_S(t)))
    return out / t


def _hat_chart(C, t, grid, vgrid, frame):
    # t > 0 only: (1/t)(delta_alpha F + sum_i a_i(x + t v) d_v(dnc(f_i) F))
    F = C(t)
    v, x = vgrid.v[:, None], grid.theta[None, :]
    out = -F - v * vgrid.derivative(F) + log_derivative_at(C, t)
    for g, a in zip(frame.functions, frame.fields):
        out = out + a(x + t * v) * vgrid.derivative(dnc_chart(g, grid, vgrid, t) * F)
    return out / t


def hat_delta(f, frame=STANDARD_FRAME, mode="auto", tol=1e-3):
    """(1/t)(delta_alpha(f) + sum_i X_i-lift * delta_{f_i}(f)).

    The zero slice is the t -> 0 limit.  With a chart sampler it is a
    quadratic Richardson extrapolation from chart data at t = eta, 2 eta,
    4 eta; otherwise a linear extrapolation from the two smallest slices,
    compared against the three-slice quadratic one and flagged in
    ``meta['flags']`` when they differ by more than 10 * tol (relative);
    such zero slices are marked ``meta['zero_extrapolated']``.
    """
    grid, vg = f.grid, f.vgrid
    da = delta_alpha(f, mode)

    def sop(t, S):
        return _hat_numerator_slice(S, t, grid, frame, da.slice_at)

    slices = np.array([sop(t, f.slice_at) for t in f.ts])
    flags = []
    if f.chart_fn is not None:
        cop = lambda t: _hat_chart(f.chart_at, t, grid, vg, frame)
        e = RICHARDSON_ETA
        zero = (8 * cop(e) - 6 * cop(2 * e) + cop(4 * e)) / 3
        cf = lambda t: zero if t == 0 else cop(t)
    else:
        H = [chart_from_slice(grid, vg, slices[-k], f.ts[-k]) for k in (1, 2, 3)]
        t1, t2, t3 = f.ts[-1], f.ts[-2], f.ts[-3]
        zero = (t2 * H[0] - t1 * H[1]) / (t2 - t1)
        # quadratic through three slices, evaluated at 0
        l1 = t2 * t3 / ((t1 - t2) * (t1 - t3))
        l2 = t1 * t3 / ((t2 - t1) * (t2 - t3))
        l3 = t1 * t2 / ((t3 - t1) * (t3 - t2))
        quad = l1 * H[0] + l2 * H[1] + l3 * H[2]
        gap = np.max(np.abs(zero - quad)) / max(np.max(np.abs(quad)), 1e-300)
        if gap > 10 * tol:
            flags.append(f"hat_delta extrapolation disagreement {gap:.2e}")
        cf = None
    sf = (lambda t: sop(t, f.slice_at)) if f.slice_fn is not None else None
    out = f.like(slices, zero, sf, cf)
    if flags:
        out.meta["flags"] = out.meta.get("flags", []) + flags
    if cf is None:
        out.meta["zero_extrapolated"] = True
    return out


# ---------------------------------------------------------- certificates

def delta_certificate(D, tag=None):
    """delta_D as an order-1 certificate over the groupoid backend."""
    return derivation(lambda f: delta_D(D, f), tag or f"delta[{D.name}]", TangentAlgebra)


def delta_alpha_certificate(mode="auto"):
    return derivation(lambda f: delta_alpha(f, mode), f"delta_alpha[{mode}]", TangentAlgebra)


def hat_delta_certificate(frame=STANDARD_FRAME, mode="auto"):
    """hat-delta as an order-2 certificate with cross terms (delta_{X_i}, delta_{f_i})."""
    cross = []
    for g, a in zip(frame.functions, frame.fields):
        cross.append((delta_certificate(CircleOperator.vector_field(a)),
                      delta_certificate(CircleOperator.function(g))))
    one = identity(TangentAlgebra)
    return LeibnizCertificate(f"hat_delta[{frame.name},{mode}]", lambda f: hat_delta(f, frame, mode),
                              2, TangentAlgebra, one, one, cross)
