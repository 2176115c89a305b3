"""Closed-form kernels on the tangent groupoid of the circle and the test corpus.

Kernels are written as phi(d, t, x, y) where d lists dnc(g) for the
embedding functions g (cos and sin by default).  At t = 0, d_i = g_i'(x) v
and y = x, so one formula gives every slice and the chart data.
"""
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..algebra import AlgebraError
from .grid import CircleGrid, VGrid, t_grid
from .kernel import TangentKernel
from .operators import COS, SIN, SECOND_FRAME, dnc_chart, dnc_slice


@dataclass
class KernelExpression:
    phi: object
    name: str
    funcs: tuple = (COS, SIN)
    self_adjoint: bool = False
    expected_fail: bool = False
    note: str = ""

    def slice(self, grid, t):
        y, x = grid.theta[:, None], grid.theta[None, :]
        d = [dnc_slice(g, grid, t) for g in self.funcs]
        return np.broadcast_to(self.phi(d, t, x, y), (grid.N, grid.N)).astype(complex)

    def chart(self, grid, vgrid, t):
        x, v = grid.theta[None, :], vgrid.v[:, None]
        d = [dnc_chart(g, grid, vgrid, t) for g in self.funcs]
        shape = (vgrid.Nv + 1, grid.N)
        return np.broadcast_to(self.phi(d, t, x, x + t * v), shape).astype(complex)

    def kernel(self, grid, ts, vgrid):
        grid = grid if isinstance(grid, CircleGrid) else CircleGrid(grid)
        return TangentKernel.from_functions(
            grid, ts, vgrid, lambda t: self.slice(grid, t), lambda t: self.chart(grid, vgrid, t),
            {"name": self.name, "self_adjoint": self.self_adjoint, "expected_fail": self.expected_fail})


def _r2(d):
    return d[0] ** 2 + d[1] ** 2


def gaussian(alpha=1.0, prefactor=None, t_decay=None, name=None, **kw):
    """prefactor(d, t, x, y) * exp(-alpha (dnc(cos)^2 + dnc(sin)^2)) * t_decay(t)."""
    td = (lambda t: np.exp(-t * t)) if t_decay is None else t_decay
    pre = prefactor or (lambda d, t, x, y: 1.0)
    return KernelExpression(lambda d, t, x, y: pre(d, t, x, y) * np.exp(-alpha * _r2(d)) * td(t),
                            name or f"gauss-a{alpha:g}", **kw)


def schwartz_corpus():
    """Twenty Schwartz kernels built from the embedding Gaussian."""
    sa = {"self_adjoint": True}
    return [
        gaussian(1.0, **sa),
        gaussian(0.5, **sa),
        gaussian(2.0, **sa),
        gaussian(1.0, lambda d, t, x, y: 1 + d[0] ** 2, name="gauss-1+d1^2", **sa),
        gaussian(1.0, lambda d, t, x, y: 1 + 0.5 * d[0] * d[1], name="gauss-1+d1d2/2", **sa),
        gaussian(1.0, lambda d, t, x, y: 0.5 * (2 + np.cos(x) + np.cos(y)), name="gauss-trig-sym", **sa),
        gaussian(1.0, lambda d, t, x, y: t, name="gauss-t"),
        gaussian(1.0, lambda d, t, x, y: 1 + t * t, name="gauss-1+t^2", **sa),
        gaussian(1.0, lambda d, t, x, y: d[0], name="gauss-d1"),
        gaussian(1.0, lambda d, t, x, y: 1j * d[1], name="gauss-i*d2", **sa),
        gaussian(1.0, lambda d, t, x, y: np.sin(x), name="gauss-sin(x)"),
        gaussian(1.0, lambda d, t, x, y: d[0] ** 2 - d[1] ** 2, name="gauss-d1^2-d2^2", **sa),
        KernelExpression(lambda d, t, x, y: np.exp(-d[0] ** 2 - 2 * d[1] ** 2 - t * t),
                         "gauss-anisotropic", **sa),
        gaussian(1.0, lambda d, t, x, y: np.exp(1j * d[0]), name="gauss-phase", **sa),
        gaussian(1.0, lambda d, t, x, y: np.cos(y - x), name="gauss-cos(y-x)", **sa),
        gaussian(1.0, t_decay=lambda t: (1 + t) * np.exp(-t), name="gauss-(1+t)e^-t", **sa),
        gaussian(1.0, t_decay=lambda t: np.exp(-t ** 4), name="gauss-e^-t^4", **sa),
        KernelExpression(lambda d, t, x, y: np.exp(-(d[0] + 0.3 * d[1]) ** 2 - d[1] ** 2 - t * t),
                         "gauss-sheared", **sa),
        gaussian(1.0, lambda d, t, x, y: np.cos(x) * np.cos(y), name="gauss-cos(x)cos(y)", **sa),
        gaussian(0.8, lambda d, t, x, y: d[0] ** 3 - d[0] * d[1] ** 2, name="gauss-cubic"),
    ]


def negative_controls():
    """Kernels that are not Schwartz; every Schwartz test must reject them."""
    nf = {"expected_fail": True, "self_adjoint": True}
    return [
        KernelExpression(lambda d, t, x, y: 1.0 + 0 * d[0], "const-one",
                         note="no decay at all", **nf),
        gaussian(1.0, t_decay=lambda t: 1.0 + 0 * t, name="no-t-decay", note="bounded but t f is not", **nf),
        gaussian(1.0, t_decay=lambda t: 1.0 / (1.0 + t), name="slow-t-decay",
                 note="t^2 f grows linearly", **nf),
        KernelExpression(lambda d, t, x, y: np.exp(-(d[0] ** 2 + d[1] ** 2) / 4 - t * t), "double-cover",
                         funcs=SECOND_FRAME.functions,
                         note="(cos 2, sin 2) is not an embedding: no decay at y = x + pi", **nf),
        KernelExpression(lambda d, t, x, y: np.exp(-t * t) / np.sqrt(1 + _r2(d)), "slow-v-decay",
                         note="polynomial decay in v", **nf),
    ]


def corpus(include_controls=True):
    return schwartz_corpus() + (negative_controls() if include_controls else [])


def by_name(name):
    for e in corpus():
        if e.name == name:
            return e
    raise AlgebraError("corpus", f"no kernel named {name!r}")


@dataclass(frozen=True)
class GridSpec:
    """Grids for a corpus build; the t-grid stops at the resolved scale."""
    N: int = 64
    V: float = 16.0
    Nv: int = 256
    t_max: float = 4.0
    ratio: float = 0.5
    t_count: int = None     # fixed number of t-slices (default: stop at the resolved scale)

    def build(self):
        ts = t_grid(self.N, self.t_max, self.ratio, count=self.t_count)
        return CircleGrid(self.N), ts, VGrid(self.V, self.Nv)

    def refined(self):
        return GridSpec(2 * self.N, self.V, self.Nv, self.t_max, self.ratio)

    def doubled(self):
        """N doubled on the same t-grid and v-grid."""
        count = self.t_count or len(self.build()[1])
        return GridSpec(2 * self.N, self.V, self.Nv, self.t_max, self.ratio, count)

    def extended(self):
        """N doubled, the t-range doubled upward and the v-box doubled at fixed spacing."""
        return GridSpec(2 * self.N, 2 * self.V, 2 * self.Nv, 2 * self.t_max, self.ratio)


def build_kernels(spec, expressions=None):
    grid, ts, vg = spec.build()
    exprs = corpus() if expressions is None else expressions
    return [e.kernel(grid, ts, vg) for e in exprs]


# ----------------------------------------------------------------- store

def file_stem(name):
    """Kernel name made safe for file names ('/' and other separators become '_')."""
    return re.sub(r"[^\w.+\-^()]", "_", name)


def save_kernel(kernel, directory, name):
    """JSON header plus one row-major float64 file per slice (real, imag interleaved)."""
    name = file_stem(name)
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    header = kernel.to_header()
    header["files"] = []
    for k in range(kernel.ts.size):
        fn = f"{name}.t{k:02d}.bin"
        np.ascontiguousarray(kernel.slices[k]).view(np.float64).tofile(d / fn)
        header["files"].append(fn)
    fn = f"{name}.zero.bin"
    np.ascontiguousarray(kernel.zero).view(np.float64).tofile(d / fn)
    header["zero_file"] = fn
    (d / f"{name}.json").write_text(json.dumps(header, indent=1, sort_keys=True))
    return d / f"{name}.json"


def load_kernel(path):
    path = Path(path)
    h = json.loads(path.read_text())
    grid, vg = CircleGrid(h["N"]), VGrid(h["V"], h["Nv"])
    N = grid.N
    slices = [np.fromfile(path.parent / f, dtype=np.float64).view(complex).reshape(N, N) for f in h["files"]]
    zero = np.fromfile(path.parent / h["zero_file"], dtype=np.float64).view(complex).reshape(vg.Nv + 1, N)
    return TangentKernel(grid, h["t"], np.array(slices), vg, zero, meta=h.get("meta"))


__all__ = ["KernelExpression", "gaussian", "schwartz_corpus", "negative_controls", "corpus", "by_name",
           "GridSpec", "build_kernels", "file_stem", "save_kernel", "load_kernel"]
