"""Constructive smooth and holomorphic functional calculus.

For self-adjoint ``x`` and ``f = x g`` with ``g`` smooth and compactly supported,

    f(x) ~ s_n = (1/2 pi n) sum_{j=-n^2}^{n^2} ghat(j/n) x_{n,j/n},
    x_{n,xi} = sum_{m=0}^{phi(|xi|)+n} (i xi)^m x^{m+1} / m!.

The engines only use products, sums, scalar multiples and adjoints of the
backend algebra, so they run unchanged on any backend namespace exposing
``mul, add, sub, scale, adjoint, norm, zeros_like``.

Evaluating ``x_{n,xi}`` term by term loses all accuracy once ``|xi| |x|`` is
large (terms of size ``e^{|xi| |x|}`` cancel).  The default evaluation uses

    x_{n,xi} = x e^{i xi x} - sum_{m > M} (i xi)^m x^{m+1} / m!,

where ``x e^{i xi x}`` comes from a unitary step recurrence and the tail is
summed term by term (positive bounds, no cancellation) or skipped when its
scalar bound is below ``tail_cutoff``.  ``method="direct"`` keeps the literal
sum for comparison.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .algebra import AlgebraError, MatrixAlgebra, as_element, is_normal, norm
from .config import DEFAULT


# ---------------------------------------------------------------- phi threshold

def _phi_formula(xi):
    return int(math.ceil(math.e * xi * xi)) + 1


def _sweep_phi(m_max):
    # log(xi^m/m!) <= -log(m!)/2  <=>  m log xi <= lgamma(m+1)/2, for all phi(xi) < m <= m_max
    for xi in np.linspace(0.0, DEFAULT.phi_cap, 2001)[1:]:
        phi = _phi_formula(xi)
        m = np.arange(phi + 1, m_max + 1)
        if m.size and np.any(m * np.log(xi) > 0.5 * gammaln(m + 1) + 1e-12):
            raise AssertionError(f"phi threshold fails at xi={xi}")
    return True


_PHI_VERIFIED = _sweep_phi(DEFAULT.phi_sweep_max)


def phi_threshold(xi):
    """Smallest-form integer with  m > phi(xi)  =>  xi^m / m! <= 1/sqrt(m!)."""
    if xi < 0:
        raise AlgebraError("domain", "phi_threshold needs xi >= 0")
    if xi > DEFAULT.phi_cap:
        raise AlgebraError("overflow", f"xi={xi} exceeds the cap {DEFAULT.phi_cap}")
    return _phi_formula(xi)


def truncation_order(n, xi):
    return phi_threshold(abs(xi)) + n


# ------------------------------------------------------------ sampled functions

def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(x, flat=1.2, support=2.5):
    """1 on [-flat, flat], 0 outside (-support, support), smooth in between."""
    return smooth_step((support - np.abs(x)) / (support - flat))


class SampledFunction:
    """A compactly supported function on [-L, L] (or the box [-L, L]^2 in ``dim=2``).

    ``fn`` is kept for exact evaluation (oracles); the engines only see
    the samples.  1-d samples live on ``x_k = -L + 2Lk/N``, k = 0..N, which
    contains 0.  2-d samples live on the cell-centred grid, which avoids
    both axes.
    """

    def __init__(self, fn, support, grid_count=None, dim=1, name="f"):
        self.fn, self.L, self.dim, self.name = fn, float(support), dim, name
        n = DEFAULT.grid_count if grid_count is None else int(grid_count)
        if n & (n - 1):
            raise AlgebraError("grid", "grid_count must be a power of two")
        self.grid_count = n
        self.h = 2 * self.L / n
        if dim == 1:
            self.grid = -self.L + self.h * np.arange(n + 1)
            self.samples = np.asarray(fn(self.grid), dtype=complex)
            scale = max(np.max(np.abs(self.samples)), 1e-300)
            if max(abs(self.samples[0]), abs(self.samples[-1])) > 1e-12 * scale:
                raise AlgebraError("support", f"{name} does not vanish at the support ends")
            self.vanishes_at_zero = abs(self.samples[n // 2]) <= 1e-14 * scale
        else:
            self.grid = -self.L + self.h * (np.arange(n) + 0.5)
            z = self.grid[:, None] + 1j * self.grid[None, :]
            self.samples = np.asarray(fn(z), dtype=complex)
            self.vanishes_at_zero = abs(complex(fn(np.array([0j]))[0])) <= 1e-14 * max(
                np.max(np.abs(self.samples)), 1e-300)

    def evaluate(self, z):
        return np.asarray(self.fn(np.asarray(z)), dtype=complex)

    def __call__(self, z):
        return self.evaluate(z)

    def quotient_samples(self):
        """Samples of g = f/x; g(0) from a one-sided 4th-order difference for f'(0)."""
        if self.dim != 1:
            raise AlgebraError("dim", "quotient_samples is 1-d")
        if not self.vanishes_at_zero:
            raise AlgebraError("domain", f"{self.name} does not vanish at 0")
        f, x, k0 = self.samples, self.grid, self.grid_count // 2
        g = np.zeros_like(f)
        nz = np.arange(x.size) != k0
        g[nz] = f[nz] / x[nz]
        g[k0] = (-25 * f[k0] + 48 * f[k0 + 1] - 36 * f[k0 + 2] + 16 * f[k0 + 3] - 3 * f[k0 + 4]) / (12 * self.h)
        return g

    def quotient_transform(self, n):
        """ghat on the frequency grid j/n, |j| <= n^2 (cached per n)."""
        cache = self.__dict__.setdefault("_ghat", {})
        if n not in cache:
            cache[n] = fourier_samples(self.quotient_samples(), self.grid, frequency_grid(n))
        return cache[n]

    def restrict(self, axis):
        """f on the real axis (``axis=0``) or y -> f(iy) (``axis=1``) as a 1-d function."""
        if axis == 0:
            fn = (lambda x: self.fn(np.asarray(x, dtype=float) + 0j))
        else:
            fn = (lambda y: self.fn(1j * np.asarray(y, dtype=float)))
        return SampledFunction(fn, self.L, self.grid_count, 1, f"{self.name}|{'xy'[axis]}")


def fourier_samples(g, grid, xi, chunk=1024):
    """ghat(xi) = int g(x) e^{-i x xi} dx by the trapezoid rule, for one or many g.

    ``g`` has shape (..., len(grid)); the result has shape (..., len(xi)).
    g vanishes at the grid ends, so the trapezoid rule is a plain sum.
    """
    g = np.asarray(g, dtype=complex)
    h = grid[1] - grid[0]
    xi = np.asarray(xi, dtype=float)
    out = np.empty(g.shape[:-1] + xi.shape, dtype=complex)
    for s in range(0, xi.size, chunk):
        e = np.exp(-1j * np.outer(grid, xi[s:s + chunk]))
        out[..., s:s + chunk] = (g @ e) * h
    return out


# ------------------------------------------------------- truncated exponentials

def unitary_step(x, theta, alg=MatrixAlgebra, terms=18):
    """u = e^{i theta x} - 1, by a power series and squaring (1+u)^2 = 1 + (2u + u^2)."""
    r = alg.norm(x) * abs(theta)
    s = max(0, int(math.ceil(math.log2(r / 0.25)))) if r > 0.25 else 0
    z = alg.scale(1j * theta / 2 ** s, x)
    term = u = z
    for m in range(2, terms + 1):
        term = alg.scale(1.0 / m, alg.mul(term, z))
        u = alg.add(u, term)
    for _ in range(s):
        u = alg.add(alg.scale(2.0, u), alg.mul(u, u))
    return u


def phase_ladder(x, step, count, alg=MatrixAlgebra):
    """Yield y_k = x e^{i k step x} for k = 0..count."""
    u = unitary_step(x, step, alg)
    y = x
    yield y
    for _ in range(count):
        y = alg.add(y, alg.mul(u, y))
        yield y


def tail_bound(r, xi, M):
    """Scalar bound on || sum_{m > M} (i xi)^m x^{m+1} / m! || for ||x|| <= r."""
    q = abs(xi) * r
    if q == 0 or r == 0:
        return 0.0
    log_first = (M + 1) * math.log(q) + math.log(r) - math.lgamma(M + 2)
    ratio = q / (M + 2)
    if ratio >= 1:
        return math.inf
    return math.exp(log_first) / (1 - ratio)


def exponential_tail(x, xi, M, alg=MatrixAlgebra, cutoff=None, r=None):
    """sum_{m > M} (i xi)^m x^{m+1}/m!, or ``None`` when its bound is below ``cutoff``."""
    cutoff = DEFAULT.tail_cutoff if cutoff is None else cutoff
    r = alg.norm(x) if r is None else r
    if tail_bound(r, xi, M) <= cutoff:
        return None
    z = alg.scale(1j * xi, x)
    term, tail, m = x, None, 0
    log_scale = 0.0
    while True:
        m += 1
        term = alg.scale(1.0 / m, alg.mul(z, term))
        log_scale += math.log(abs(xi) * r / m) if xi else -math.inf
        if m > M:
            tail = term if tail is None else alg.add(tail, term)
            if abs(xi) * r < m and math.exp(log_scale) * r <= cutoff * 1e-3:
                return tail


def truncated_exponential(x, n, xi, alg=MatrixAlgebra, method="stable"):
    """x_{n,xi} = sum_{m=0}^{phi(|xi|)+n} (i xi)^m x^{m+1} / m! for self-adjoint x."""
    M = truncation_order(n, xi)
    if method == "direct":
        z = alg.scale(1j * xi, x)
        term = out = x
        for m in range(1, M + 1):
            term = alg.scale(1.0 / m, alg.mul(z, term))
            out = alg.add(out, term)
        return out
    if method != "stable":
        raise AlgebraError("method", method)
    y = alg.add(x, alg.mul(unitary_step(x, xi, alg), x))
    tail = exponential_tail(x, xi, M, alg)
    return y if tail is None else alg.sub(y, tail)


def riemann_sums(x, ghats, n, alg=MatrixAlgebra, with_tail=True):
    """(1/2 pi n) sum_j ghat_j x_{n,j/n} for each coefficient array in ``ghats``.

    ``ghats[f]`` has shape (2n^2+1, ...) indexed by j + n^2; trailing axes
    broadcast against batched backends.  ``x`` must be self-adjoint, which
    gives x_{n,-xi} = x_{n,xi}^*.
    """
    J = n * n
    r = alg.norm(x)
    if isinstance(x, np.ndarray):
        return _riemann_sums_dense(x, ghats, n, alg, with_tail, r)
    sums = [None] * len(ghats)
    for k, y in enumerate(phase_ladder(x, 1.0 / n, J, alg)):
        if with_tail:
            tail = exponential_tail(x, k / n, truncation_order(n, k / n), alg, r=r)
            if tail is not None:
                y = alg.sub(y, tail)
        ya = alg.adjoint(y) if k else None
        for i, gh in enumerate(ghats):
            term = alg.scale(gh[J + k], y)
            if k:
                term = alg.add(term, alg.scale(gh[J - k], ya))
            sums[i] = term if sums[i] is None else alg.add(sums[i], term)
    return [alg.scale(1.0 / (2 * np.pi * n), s) for s in sums]


def _riemann_sums_dense(x, ghats, n, alg, with_tail, r, chunk=128):
    # same sums as the generic loop, accumulated chunk by chunk in fixed order
    J = n * n
    sums = [np.zeros_like(x, dtype=complex) for _ in ghats]
    buf, ks = [], []

    def flush():
        ys = np.array(buf)
        yas = ys.conj().swapaxes(-1, -2)
        idx = np.array(ks)
        for i, gh in enumerate(ghats):
            cp = gh[J + idx]
            cm = np.where((idx > 0).reshape((-1,) + (1,) * (cp.ndim - 1)), gh[J - idx], 0)
            pad = (1,) * (ys.ndim - cp.ndim)
            sums[i] += (cp.reshape(cp.shape + pad) * ys + cm.reshape(cm.shape + pad) * yas).sum(0)
        buf.clear()
        ks.clear()

    for k, y in enumerate(phase_ladder(x, 1.0 / n, J, alg)):
        if with_tail:
            tail = exponential_tail(x, k / n, truncation_order(n, k / n), alg, r=r)
            if tail is not None:
                y = y - tail
        buf.append(y)
        ks.append(k)
        if len(buf) == chunk:
            flush()
    if buf:
        flush()
    return [s / (2 * np.pi * n) for s in sums]


def frequency_grid(n):
    return np.arange(-n * n, n * n + 1) / n


# ------------------------------------------------------------ smooth calculus

def _check_self_adjoint(a, alg):
    na = alg.norm(a)
    if alg.norm(alg.sub(a, alg.adjoint(a))) > DEFAULT.hermitian_imag * max(na, 1.0):
        raise AlgebraError("non-self-adjoint", "smooth_calc_self_adjoint needs a = a*")
    return na


def smooth_calc_self_adjoint(a, f, n_max=64, alg=MatrixAlgebra, spectrum_bound=None, with_tail=True):
    """s_{n_max} for f(a); ``f`` may be a single SampledFunction or a list of them.

    ``spectrum_bound`` defaults to ||a||; it must lie inside every support.
    """
    single = isinstance(f, SampledFunction)
    fs = [f] if single else list(f)
    na = _check_self_adjoint(a, alg)
    rad = na if spectrum_bound is None else spectrum_bound
    for fi in fs:
        if fi.dim != 1:
            raise AlgebraError("dim", "smooth_calc_self_adjoint takes 1-d functions")
        if rad >= fi.L:
            raise AlgebraError("support", f"spectrum radius {rad:.3g} escapes the support of {fi.name}")
    if na == 0.0:
        out = [alg.zeros_like(a) for _ in fs]
        return out[0] if single else out
    todo = [fi for fi in fs if n_max not in fi.__dict__.get("_ghat", {})]
    if todo and all(fi.grid_count == todo[0].grid_count and fi.L == todo[0].L for fi in todo):
        joint = fourier_samples(np.array([fi.quotient_samples() for fi in todo]), todo[0].grid,
                                frequency_grid(n_max))
        for fi, gh in zip(todo, joint):
            fi.__dict__.setdefault("_ghat", {})[n_max] = gh
    ghats = [fi.quotient_transform(n_max) for fi in fs]
    out = riemann_sums(a, ghats, n_max, alg, with_tail)
    return out[0] if single else out


def calc_sequence(a, f, ns, alg=MatrixAlgebra, **kw):
    """s_n for each n in ``ns`` (for convergence studies)."""
    return [smooth_calc_self_adjoint(a, f, n, alg, **kw) for n in ns]


def _axis_exponential_sums(x, n, grid):
    """A_p = sum_j e^{-i grid_p xi_j} x_{n,xi_j} for matrices, all p at once."""
    J = n * n
    ys = np.array(list(phase_ladder(x, 1.0 / n, J)))
    r = norm(x)
    for k in range(J + 1):
        tail = exponential_tail(x, k / n, truncation_order(n, k / n), r=r)
        if tail is not None:
            ys[k] = ys[k] - tail
    full = np.concatenate([ys[:0:-1].conj().transpose(0, 2, 1), ys])
    e = np.exp(-1j * np.outer(grid, frequency_grid(n)))
    return np.tensordot(e, full, axes=(1, 0))


def smooth_calc_normal(a, f, n_max=48):
    """f(a) for a normal matrix and a 2-d SampledFunction with f(0) = 0.

    f = f(x) + f(iy) + x y G(x, y): the first two parts go through the
    self-adjoint engine on Re a and Im a; the remainder is a double Riemann
    sum, evaluated separably as sum_pq G_pq A_p B_q.
    """
    a = as_element(a)
    if f.dim != 2:
        raise AlgebraError("dim", "smooth_calc_normal takes a 2-d function")
    if not f.vanishes_at_zero:
        raise AlgebraError("domain", "f must vanish at 0")
    if not is_normal(a):
        raise AlgebraError("non-normal", "smooth_calc_normal needs a normal element")
    re, im = (a + a.conj().T) / 2, (a - a.conj().T) / 2j
    if norm(a) == 0.0:
        return np.zeros_like(a)
    out = np.zeros_like(a)
    for axis, part in ((0, re), (1, im)):
        if norm(part) > DEFAULT.hermitian_imag * norm(a):
            out += smooth_calc_self_adjoint(part, f.restrict(axis), n_max)
    if norm(re) > DEFAULT.hermitian_imag * norm(a) and norm(im) > DEFAULT.hermitian_imag * norm(a):
        x = f.grid
        f3 = f.samples - f.fn(x + 0j)[:, None] - f.fn(1j * x)[None, :]
        G = f3 / (x[:, None] * x[None, :]) * f.h * f.h
        A = _axis_exponential_sums(re, n_max, x)
        B = _axis_exponential_sums(im, n_max, x)
        GB = np.tensordot(G, B, axes=(1, 0))
        out += np.einsum("pij,pjk->ik", A, GB) / (2 * np.pi * n_max) ** 2
    return out


# -------------------------------------------------- resolvent and holomorphic

class BatchMatrixAlgebra:
    """Stacks of matrices (K, d, d) with per-member scalar coefficients."""

    name = "matrix-batch"

    @staticmethod
    def mul(a, b):
        return a @ b

    @staticmethod
    def adjoint(a):
        return a.conj().swapaxes(-1, -2)

    @staticmethod
    def norm(a):
        return float(np.max(np.linalg.norm(a, ord=2, axis=(-2, -1)))) if a.size else 0.0

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def scale(c, a):
        c = np.asarray(c)
        return (c[..., None, None] if c.ndim else c) * a

    @staticmethod
    def zeros_like(a):
        return np.zeros_like(a, dtype=complex)


@dataclass
class ResolventPlan:
    """Data of the resolvent construction at one node w (in rescaled units)."""

    w: complex
    rho: float
    sigma_min: float
    sigma_max: float


def _resolvent_function(w2, lo, hi, L):
    """x -> 1/(x+|w|^2) - 1/|w|^2 on the spectrum window [lo, hi], extended smoothly.

    Below the window the denominator s = x + |w|^2 is replaced by a smooth
    floor that stays >= gap/2 (gap = lo + |w|^2), so the pole never enters;
    wide outer transitions give compact support in (-L, L).  On the window
    f(x) = -x / (|w|^2 (x + |w|^2)); the extension keeps the factor x, so f(0) = 0.
    """
    gap = lo + w2

    def fn(x):
        x = np.asarray(x, dtype=float)
        s = x + w2
        t = smooth_step(s / gap)
        den = t * s + (1 - t) * 0.5 * gap
        outer = smooth_step((x + L) / (L - w2)) * smooth_step((L - x) / (L - hi))
        return -outer * x / (w2 * den)
    return fn


def resolvent_plan(a, w, margin=None):
    a = as_element(a)
    margin = DEFAULT.resolvent_margin if margin is None else margin
    if w == 0:
        raise AlgebraError("domain", "w = 0 is excluded")
    s = np.linalg.svd(w * np.eye(a.shape[0]) - a, compute_uv=False)
    if s[-1] < margin * max(norm(a), 1e-300):
        raise AlgebraError("margin", f"w={w} is within {s[-1]:.3g} of the spectrum")
    # ||a_w|| = max |s^2 - |w|^2| over singular values s of w - a; rescaling
    # the pair (a, w) by rho = sqrt(||a_w||) brings a_w to norm 1
    w2 = abs(w) ** 2
    rho = math.sqrt(max(abs(s[0] ** 2 - w2), abs(s[-1] ** 2 - w2), 1e-300))
    return ResolventPlan(w, rho, float(s[-1]), float(s[0]))


def resolvent_elements(a, ws, n_max=48, grid_count=2048, with_tail=True, margin=None):
    """a/(w - a) for every w in ``ws`` via the a_w construction, batched over w.

    For each w, with (a, w) rescaled by rho (the quotient is unchanged),
    a_w = (w - a)^*(w - a) - |w|^2 = a^*a - conj(w) a - w a^*, and
    a/(w - a) = (f(a_w) + 1/|w|^2)(w - a)^* a  with  f(x) = 1/(x+|w|^2) - 1/|w|^2.
    """
    a = as_element(a)
    ws = np.atleast_1d(np.asarray(ws, dtype=complex))
    if norm(a) == 0.0:
        return np.zeros((ws.size,) + a.shape, dtype=complex)
    plans = [resolvent_plan(a, w, margin) for w in ws]
    rho = max(p.rho for p in plans)
    ar = a / rho
    wr = ws / rho
    w2 = np.abs(wr) ** 2
    aw = (ar.conj().T @ ar)[None] - wr.conj()[:, None, None] * ar[None] - wr[:, None, None] * ar.conj().T[None]
    lo = np.array([(p.sigma_min / rho) ** 2 for p in plans]) - w2
    hi = np.array([(p.sigma_max / rho) ** 2 for p in plans]) - w2
    L = 2.0 * max(np.max(w2), np.max(np.abs(hi)), 0.5)
    fns = [SampledFunction(_resolvent_function(w2[k], lo[k], hi[k], L), L, grid_count, name=f"res[{k}]")
           for k in range(ws.size)]
    xi = frequency_grid(n_max)
    g = np.array([fk.quotient_samples() for fk in fns])
    ghat = fourier_samples(g, fns[0].grid, xi).T          # (freq, K)
    (fa,) = riemann_sums(aw, [ghat], n_max, BatchMatrixAlgebra, with_tail)
    tail = wr.conj()[:, None, None] * ar[None] - (ar.conj().T @ ar)[None]      # (w - a)^* a
    return (fa + (1.0 / w2)[:, None, None] * np.eye(a.shape[0])) @ tail


def resolvent_element(a, w, n_max=48, **kw):
    return resolvent_elements(a, [w], n_max, **kw)[0]


def holo_calc(a, f, contour, n_max=48, **kw):
    """(1/2 pi i) sum_k g(w_k) dw_k a/(w_k - a), g(w) = f(w)/w, resolvents built as above.

    ``f`` may be one function or a list sharing the resolvents.
    """
    a = as_element(a)
    w = contour.nodes
    if np.min(np.abs(w)) < contour.min_distance:
        raise AlgebraError("contour", "0 lies on the contour")
    lam = np.linalg.eigvals(a)
    if np.min(np.abs(w[:, None] - lam[None, :])) < DEFAULT.eigen_distance * max(1.0, norm(a)):
        raise AlgebraError("contour", "contour passes through the spectrum")
    for z in lam:
        if round(contour.winding(z)) != 1:
            raise AlgebraError("contour", f"eigenvalue {z} is not enclosed")
    single = callable(f)
    fs = [f] if single else list(f)
    R = resolvent_elements(a, w, n_max, **kw)
    out = []
    for fi in fs:
        fw = np.asarray(fi.evaluate(w) if hasattr(fi, "evaluate") else fi(w), dtype=complex)
        out.append(np.tensordot(fw / w * contour.weights, R, axes=(0, 0)) / (2j * np.pi))
    return out[0] if single else out


def parametrized_calc(family, f, n_max=32, ns=None, grid_count=1024, support=None):
    """Apply the calculus pointwise over a family of self-adjoint matrices sharing one xi-grid.

    ``family`` is a list of (w, x_w); ``f(w, lam)`` is the function at parameter w.
    Returns (outputs, indicator) where indicator[i] = max_w ||s_{n_i}(w) - s_{n_{i-1}}(w)||.
    """
    ws = [w for w, _ in family]
    xs = np.array([as_element(x) for _, x in family])
    for x in xs:
        _check_self_adjoint(x, MatrixAlgebra)
    ns = [n_max] if ns is None else list(ns)
    L = support if support is not None else 2.5 * max(1.0, BatchMatrixAlgebra.norm(xs))
    fns = [SampledFunction(lambda lam, w=w: f(w, lam), L, grid_count, name=f"f[{w}]") for w in ws]
    g = np.array([fk.quotient_samples() for fk in fns])
    outs = []
    for n in ns:
        ghat = fourier_samples(g, fns[0].grid, frequency_grid(n)).T
        outs.append(riemann_sums(xs, [ghat], n, BatchMatrixAlgebra)[0])
    indicator = [BatchMatrixAlgebra.norm(outs[i] - outs[i - 1]) for i in range(1, len(outs))]
    return list(outs[-1]), indicator
