"""Grids on the circle, the v-line and the t-axis, with spectral helpers."""
import math
from dataclasses import dataclass

import numpy as np

from ..algebra import AlgebraError


class CircleGrid:
    """theta_k = 2 pi k / N with quadrature weight 2 pi / N."""

    def __init__(self, N):
        N = int(N)
        if N < 4 or N & (N - 1):
            raise AlgebraError("grid", "N must be a power of two >= 4")
        self.N = N
        self.theta = 2 * np.pi * np.arange(N) / N
        self.weight = 2 * np.pi / N
        self.modes = np.fft.fftfreq(N, 1.0 / N)
        # first-derivative symbol; the Nyquist mode is dropped so D is real antisymmetric
        k = 1j * self.modes
        k[N // 2] = 0.0
        self._dsym = k
        self.D = np.real(np.fft.ifft(k[:, None] * np.fft.fft(np.eye(N), axis=0), axis=0))

    def __eq__(self, other):
        return isinstance(other, CircleGrid) and other.N == self.N

    def __hash__(self):
        return hash(("circle", self.N))

    def derivative(self, values, axis=0, order=1):
        """Spectral derivative along ``axis``."""
        c = np.fft.fft(values, axis=axis)
        shape = [1] * np.ndim(values)
        shape[axis] = self.N
        c = c * (self._dsym ** order).reshape(shape)
        out = np.fft.ifft(c, axis=axis)
        return out if np.iscomplexobj(values) else out.real

    def shift_phases(self, s):
        """Multipliers of the Fourier coefficients for f(x) -> f(x + s); ``s`` broadcasts."""
        s = np.asarray(s, dtype=float)[..., None]
        ph = np.exp(1j * self.modes * s)
        ph[..., self.N // 2] = np.cos(self.N / 2 * s[..., 0])
        return ph

    def interpolate(self, values, points, axis=0):
        """Trigonometric interpolant of ``values`` (periodic along ``axis``) at ``points``."""
        v = np.moveaxis(np.asarray(values), axis, 0)
        c = np.fft.fft(v, axis=0) / self.N
        pts = np.asarray(points, dtype=float)
        basis = np.exp(1j * pts[..., None] * self.modes)
        basis[..., self.N // 2] = np.cos(self.N / 2 * pts)
        return np.tensordot(basis, c, axes=([-1], [0]))


@dataclass(frozen=True)
class VGrid:
    """v_k = -V + 2Vk/Nv, k = 0..Nv; contains 0 and is symmetric, so v -> -v is k -> Nv-k."""
    V: float = 16.0
    Nv: int = 256

    def __post_init__(self):
        if self.Nv < 8 or self.Nv % 2:
            raise AlgebraError("grid", "Nv must be even and >= 8")

    @property
    def h(self):
        return 2 * self.V / self.Nv

    @property
    def v(self):
        return -self.V + self.h * np.arange(self.Nv + 1)

    @property
    def xi(self):
        # frequencies of the periodic extension with period 2V
        return 2 * np.pi * np.fft.fftfreq(self.Nv, self.h)

    def derivative(self, F, order=1):
        """Spectral v-derivative along axis 0, treating F as 2V-periodic (it vanishes at +-V)."""
        c = np.fft.fft(F[:-1], axis=0)
        sym = 1j * self.xi
        sym[self.Nv // 2] = 0.0
        d = np.fft.ifft(c * (sym ** order)[:, None], axis=0)
        if not np.iscomplexobj(F):
            d = d.real
        return np.concatenate([d, d[:1]], axis=0)

    def transform(self, F):
        """F_hat(xi, x) = int F(v, x) e^{-i xi v} dv on the periodic grid (xi in fft order)."""
        c = np.fft.fft(F[:-1], axis=0) * self.h
        # the grid starts at -V, not 0
        return c * np.exp(1j * self.xi * self.V)[:, None]

    def inverse(self, Fh):
        c = Fh * np.exp(-1j * self.xi * self.V)[:, None] / self.h
        F = np.fft.ifft(c, axis=0)
        return np.concatenate([F, F[:1]], axis=0)


def t_grid(N, t_max=4.0, ratio=0.5, resolve=4.0, count=None):
    """Geometric t-grid t_max, t_max*ratio, ... down to the resolved scale.

    Slices are kept while t*N/(2 pi) >= ``resolve``: below that the
    kernels are narrower than the circle grid can represent.  ``count``
    overrides the stopping rule.
    """
    if not 0 < ratio < 1:
        raise AlgebraError("grid", "ratio must lie in (0, 1)")
    if count is None:
        t_min = resolve * 2 * np.pi / N
        count = int(math.floor(math.log(t_min / t_max) / math.log(ratio) + 1e-9)) + 1
    if count < 1:
        raise AlgebraError("grid", "empty t-grid")
    return t_max * ratio ** np.arange(count)


def log_derivative(values, ts):
    """t d/dt along axis 0 of samples on a geometric grid (2nd order in log t, one-sided at the ends)."""
    if len(ts) < 3:
        raise AlgebraError("grid", "t-derivatives need at least 3 slices")
    s = np.log(ts)
    h = s[1] - s[0]
    if not np.allclose(np.diff(s), h, rtol=1e-9, atol=0):
        raise AlgebraError("grid", "t-grid is not geometric")
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * h)
    out[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h)
    out[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * h)
    return out


# 7-point stencil in log t (6th order)
_LOG_STEP = 1e-2
_STENCIL = np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0
_OFFSETS = np.array([-3, -2, -1, 1, 2, 3])


def log_derivative_at(fn, t, eps=_LOG_STEP):
    """t d/dt fn(t) from six evaluations at t e^{k eps}."""
    out = None
    for c, k in zip(_STENCIL, _OFFSETS):
        term = c * fn(t * math.exp(k * eps))
        out = term if out is None else out + term
    return out / eps
