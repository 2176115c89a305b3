"""Kernels on the tangent groupoid of the circle and their *-algebra.

A kernel is stored as slices K_t(y, x) on a geometric t-grid and a zero
slice F(v, x) on the v-grid.  Kernels built from closed forms also carry
``slice_fn`` (any t > 0) and ``chart_fn`` (chart coordinates
F_t(v, x) = f(x + t v, x, t), any t >= 0).  Every operation propagates
both when its inputs have them, which is what t-derivatives and t -> 0
limits are computed from.
"""

import numpy as np
from scipy.signal import fftconvolve

from ..algebra import AlgebraError
from .grid import CircleGrid, VGrid


class TangentKernel:

    def __init__(self, grid, ts, slices, vgrid, zero, slice_fn=None, chart_fn=None, meta=None):
        self.grid = grid if isinstance(grid, CircleGrid) else CircleGrid(grid)
        self.ts = np.asarray(ts, dtype=float)
        self.slices = np.asarray(slices, dtype=complex)
        self.vgrid = vgrid
        self.zero = np.asarray(zero, dtype=complex)
        N = self.grid.N
        if self.slices.shape != (self.ts.size, N, N):
            raise AlgebraError("grid", f"slices have shape {self.slices.shape}")
        if self.zero.shape != (vgrid.Nv + 1, N):
            raise AlgebraError("grid", f"zero slice has shape {self.zero.shape}")
        self.slice_fn = slice_fn
        self.chart_fn = chart_fn
        self.meta = dict(meta or {})
        self._cache = {}

    # -- sampling

    @classmethod
    def from_functions(cls, grid, ts, vgrid, slice_fn, chart_fn, meta=None):
        slices = np.array([slice_fn(t) for t in ts])
        return cls(grid, ts, slices, vgrid, chart_fn(0.0), _memo(slice_fn), _memo(chart_fn), meta)

    @property
    def N(self):
        return self.grid.N

    @property
    def lazy(self):
        return self.slice_fn is not None

    def _index(self, t):
        k = np.flatnonzero(np.abs(self.ts - t) <= 1e-13 * t)
        return int(k[0]) if k.size else None

    def slice_at(self, t):
        k = self._index(t)
        if k is not None:
            return self.slices[k]
        if self.slice_fn is None:
            raise AlgebraError("grid", f"t={t:g} is off the grid and the kernel has no sampler")
        return self.slice_fn(t)

    def chart_at(self, t):
        if t == 0:
            return self.zero
        if self.chart_fn is None:
            raise AlgebraError("grid", "the kernel has no chart sampler")
        return self.chart_fn(t)

    def bare(self):
        """The stored data only (no samplers)."""
        return TangentKernel(self.grid, self.ts, self.slices, self.vgrid, self.zero, meta=self.meta)

    def like(self, slices, zero, slice_fn=None, chart_fn=None, meta=None, others=()):
        """A kernel on the same grids; provenance marks are inherited unless ``meta`` is given."""
        if meta is None:
            meta = {}
            flags = [s for k in (self,) + tuple(others) for s in k.meta.get("flags", [])]
            if flags:
                meta["flags"] = flags
            if any(k.meta.get("zero_extrapolated") for k in (self,) + tuple(others)):
                meta["zero_extrapolated"] = True
        return TangentKernel(self.grid, self.ts, slices, self.vgrid, zero,
                             _memo(slice_fn), _memo(chart_fn), meta)

    def check_compatible(self, other):
        if (other.grid != self.grid or other.vgrid != self.vgrid
                or other.ts.shape != self.ts.shape or not np.allclose(other.ts, self.ts, rtol=1e-13)):
            raise AlgebraError("grid", "kernels live on different grids")

    def sup(self):
        """Sup of |f| over every stored point, zero slice included."""
        return float(max(np.max(np.abs(self.slices)), np.max(np.abs(self.zero))))

    def chart_residual(self):
        """sup |K_{t_T}(x + t_T v, x) - F(v, x)| over the smallest slice (an O(t_T) quantity)."""
        t = self.ts[-1]
        return float(np.max(np.abs(chart_from_slice(self.grid, self.vgrid, self.slices[-1], t) - self.zero)))

    def to_header(self):
        return {"N": self.N, "t": [float(t) for t in self.ts], "V": self.vgrid.V,
                "Nv": self.vgrid.Nv, "meta": {k: v for k, v in self.meta.items()
                                              if isinstance(v, (str, int, float, bool, list))}}


def _memo(fn):
    if fn is None:
        return None
    cache = {}

    def wrapped(t):
        key = float(t)
        if key not in cache:
            cache[key] = fn(key)
        return cache[key]
    return wrapped


def chart_from_slice(grid, vgrid, K, t):
    """K(x + t v, x) on the (v, x) grid by trigonometric interpolation in y."""
    c = np.fft.fft(K, axis=0) / grid.N                                   # modes x columns
    pts = grid.theta[None, :] + t * vgrid.v[:, None]                   # (Nv+1, N)
    basis = np.exp(1j * pts[..., None] * grid.modes)
    basis[..., grid.N // 2] = np.cos(grid.N / 2 * pts)
    return np.einsum("vxm,mx->vx", basis, c)


def _all_lazy(*ks, attr="slice_fn"):
    return all(getattr(k, attr) is not None for k in ks)


# ------------------------------------------------------------- products

def convolve_zero(F, G, vgrid):
    """(F*G)(v, x) = int F(v - w, x) G(w, x) dw, zero padded, cropped to the v-grid."""
    full = fftconvolve(F, G, axes=0) * vgrid.h
    c = vgrid.Nv // 2
    return full[c:c + vgrid.Nv + 1]


def convolve_chart(F, G, t, grid, vgrid):
    """Chart form of the t > 0 product: int F_t(v - w, x + t w) G_t(w, x) dw."""
    if t == 0:
        return convolve_zero(F, G, vgrid)
    v, Nv = vgrid.v, vgrid.Nv
    c = np.fft.fft(F, axis=1)
    out = np.zeros(np.broadcast_shapes(F.shape, G.shape), dtype=complex)
    half = Nv // 2
    for k in range(Nv + 1):
        g = G[k]
        if not np.any(g):
            continue
        shifted = np.fft.ifft(c * grid.shift_phases(t * v[k])[None, :], axis=1)
        # F(v_i - v_k) sits at row i - k + Nv/2
        lo, hi = max(0, k - half), min(Nv, k + half)
        out[lo:hi + 1] += shifted[lo - k + half:hi - k + half + 1] * g
    return out * vgrid.h


def convolve(f, g):
    """(f*g)_t = (2 pi / N) t^{-1} K_t G_t; the zero slice is a per-x convolution in v."""
    f.check_compatible(g)
    w = f.grid.weight
    slices = (w / f.ts)[:, None, None] * np.matmul(f.slices, g.slices)
    zero = convolve_zero(f.zero, g.zero, f.vgrid)
    sf = cf = None
    if _all_lazy(f, g):
        sf = lambda t: (w / t) * (f.slice_at(t) @ g.slice_at(t))
    if _all_lazy(f, g, attr="chart_fn"):
        cf = lambda t: convolve_chart(f.chart_at(t), g.chart_at(t), t, f.grid, f.vgrid)
    return f.like(slices, zero, sf, cf, others=(g,))


def adjoint(f):
    """f*(y, x, t) = conj f(x, y, t); f*(v, x, 0) = conj f(-v, x, 0)."""
    slices = np.conj(np.swapaxes(f.slices, 1, 2))
    zero = np.conj(f.zero[::-1])
    sf = cf = None
    if f.slice_fn is not None:
        sf = lambda t: np.conj(f.slice_at(t).T)
    if f.chart_fn is not None:
        def cf(t):
            F = f.chart_at(t)[::-1]
            ph = f.grid.shift_phases(t * f.vgrid.v)
            return np.conj(np.fft.ifft(np.fft.fft(F, axis=1) * ph, axis=1))
    return f.like(slices, zero, sf, cf)


# --------------------------------------------------------- linear algebra

def _linear(fn, *ks):
    first = ks[0]
    for k in ks[1:]:
        first.check_compatible(k)
    slices = fn(*[k.slices for k in ks])
    zero = fn(*[k.zero for k in ks])
    sf = cf = None
    if _all_lazy(*ks):
        sf = lambda t: fn(*[k.slice_at(t) for k in ks])
    if _all_lazy(*ks, attr="chart_fn"):
        cf = lambda t: fn(*[k.chart_at(t) for k in ks])
    return first.like(slices, zero, sf, cf, others=ks[1:])


def add(f, g):
    return _linear(lambda a, b: a + b, f, g)


def sub(f, g):
    return _linear(lambda a, b: a - b, f, g)


def scale(c, f):
    return _linear(lambda a: c * a, f)


def zeros_like(f):
    return f.like(np.zeros_like(f.slices), np.zeros_like(f.zero), meta={})


def mult_t(f):
    """(t f)(y, x, t); zero at t = 0."""
    slices = f.ts[:, None, None] * f.slices
    sf = cf = None
    if f.slice_fn is not None:
        sf = lambda t: t * f.slice_at(t)
    if f.chart_fn is not None:
        cf = lambda t: t * f.chart_at(t)
    return f.like(slices, np.zeros_like(f.zero), sf, cf)


def discrete_unit(like, t):
    """The kernel whose slice at ``t`` is the unit of (2 pi/N) t^{-1} K G (zero elsewhere)."""
    k = like._index(t)
    if k is None:
        raise AlgebraError("grid", f"t={t:g} is not a grid slice")
    slices = np.zeros_like(like.slices)
    slices[k] = t * like.N / (2 * np.pi) * np.eye(like.N)
    return like.like(slices, np.zeros_like(like.zero), meta={})


# ---------------------------------------------------------------- norms

def pi_t_norm(f, t):
    """Operator norm of pi_t(f) = (2 pi/N) t^{-1} K_t on L^2 of the circle."""
    return float(f.grid.weight / t * np.linalg.norm(f.slice_at(t), 2))


def pi_x_norms(f):
    """Per x, sup over frequency of |F_hat(., x)| (norm of convolution by F on the line)."""
    return np.max(np.abs(f.vgrid.transform(f.zero)), axis=0)


def cstar_norm(f):
    """max(sup_t ||pi_t(f)||, sup_x ||pi_x(f)||) over the stored slices."""
    nt = max(pi_t_norm(f, t) for t in f.ts)
    return float(max(nt, np.max(pi_x_norms(f))))


def l1_bounds(f):
    """(per-slice L^1-type majorants, per-x majorants at t = 0)."""
    a = np.abs(f.slices)
    rows = a.sum(axis=2).max(axis=1)
    cols = a.sum(axis=1).max(axis=1)
    per_t = f.grid.weight / f.ts * np.maximum(rows, cols)
    per_x = f.vgrid.h * np.abs(f.zero).sum(axis=0)
    return per_t, per_x


class TangentAlgebra:
    """Backend for the generic engines; elements are TangentKernel."""
    name = "tangent-groupoid"
    mul = staticmethod(convolve)
    adjoint = staticmethod(adjoint)
    add = staticmethod(add)
    sub = staticmethod(sub)
    scale = staticmethod(scale)
    zeros_like = staticmethod(zeros_like)
    norm = staticmethod(cstar_norm)

    @staticmethod
    def diff_norm(a, b):
        return cstar_norm(sub(a, b))


def sup_distance(f, g):
    return sub(f, g).sup()


def relative_gap(f, g):
    return sup_distance(f, g) / max(1.0, f.sup(), g.sup())


__all__ = ["TangentKernel", "VGrid", "CircleGrid", "convolve", "adjoint", "add", "sub", "scale",
           "mult_t", "zeros_like", "discrete_unit", "pi_t_norm", "pi_x_norms", "cstar_norm",
           "l1_bounds", "TangentAlgebra", "chart_from_slice", "convolve_chart", "convolve_zero",
           "sup_distance", "relative_gap"]
