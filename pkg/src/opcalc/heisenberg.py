"""Discretised convolution algebra of the Heisenberg group.

Coordinates (x, y, z) with product

    (x, y, z)(x', y', z') = (x + x', y + y', z + z' + x y' - y x'),

inverse (x, y, z)^{-1} = (-x, -y, -z) and Lebesgue measure as Haar measure.
Kernels live on symmetric grids ``i * h`` (i = -N/2..N/2) in x, y and
``k * hz`` in z.  In the convolution

    (f * g)(p) = sum_q f(q) g(q^{-1} p) h^2 hz,   q^{-1} p = (x-a, y-b, z-c-a y+b x),

the x, y arguments stay on the grid and only the z argument is shifted by
``s = b x - a y``, which is evaluated by linear interpolation.  The discrete
adjoint ``f*(p) = conj f(p^{-1})`` is exact on the symmetric grid.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import leibniz as lz
from .algebra import AlgebraError


@dataclass
class GroupKernel:
    data: np.ndarray                  # shape (N+1, N+1, Nz+1)
    L: float                          # half-width in x, y
    Lz: float = None                  # half-width in z (defaults to L)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.Lz is None:
            self.Lz = self.L
        n, m, k = self.data.shape
        if n != m or n % 2 == 0 or k % 2 == 0:
            raise AlgebraError("grid", f"expected odd shape (n, n, k), got {self.data.shape}")

    @property
    def N(self):
        return self.data.shape[0] - 1

    @property
    def Nz(self):
        return self.data.shape[2] - 1

    @property
    def h(self):
        return 2 * self.L / self.N

    @property
    def hz(self):
        return 2 * self.Lz / self.Nz

    @property
    def cell(self):
        return self.h * self.h * self.hz

    def axes(self):
        c, cz = self.N // 2, self.Nz // 2
        x = (np.arange(self.N + 1) - c) * self.h
        z = (np.arange(self.Nz + 1) - cz) * self.hz
        return x, x, z

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def like(self, data, **meta):
        return GroupKernel(data, self.L, self.Lz, dict(meta))

    def boundary_max(self, width=2):
        d = np.abs(self.data)
        w = width
        shell = np.ones(d.shape, bool)
        shell[w:-w, w:-w, w:-w] = False
        return float(d[shell].max())

    def to_json(self):
        return {"shape": list(self.data.shape), "L": self.L, "Lz": self.Lz,
                "re": self.data.real.ravel().tolist(), "im": self.data.imag.ravel().tolist()}

    @classmethod
    def from_json(cls, d):
        arr = (np.array(d["re"]) + 1j * np.array(d["im"])).reshape(d["shape"])
        return cls(arr, d["L"], d["Lz"])


def sample(fn, N, L, Nz=None, Lz=None):
    """Kernel with samples fn(x, y, z) on the grid."""
    Nz = N if Nz is None else Nz
    Lz = L if Lz is None else Lz
    if N % 2 or Nz % 2:
        raise AlgebraError("grid", "N and Nz must be even")
    k = GroupKernel(np.zeros((N + 1, N + 1, Nz + 1)), L, Lz)
    X, Y, Z = k.mesh()
    k.data = np.asarray(fn(X, Y, Z), dtype=complex) * np.ones_like(X)
    return k


def _check_grid(f, g):
    if f.data.shape != g.data.shape or f.L != g.L or f.Lz != g.Lz:
        raise AlgebraError("grid", "kernels live on different grids")


def _pad(f, px, pz):
    return GroupKernel(np.pad(f.data, ((px, px), (px, px), (pz, pz))), f.L + px * f.h, f.Lz + pz * f.hz)


def group_convolve(f, g, enlarge=False):
    """f * g on the common grid.

    With ``enlarge`` the product is computed on a box twice as wide and
    cropped; meta['mass_loss'] is then the L^1 mass outside the box.
    Otherwise it is the defect |sum(f) sum(g) - sum(f*g)| (times cell volumes).
    """
    _check_grid(f, g)
    if enlarge:
        px, pz = f.N // 2, f.Nz // 2
        big = group_convolve(_pad(f, px, pz), _pad(g, px, pz))
        crop = big.data[px:-px, px:-px, pz:-pz]
        loss = float((np.abs(big.data).sum() - np.abs(crop).sum()) * f.cell)
        res = f.like(crop, mass_loss=loss)
        if loss > 1e-6 * max(l1_norm(g), 1e-300):
            res.meta["mass_warning"] = True
        return res
    n1, nz1 = f.N + 1, f.Nz + 1
    c, cz = f.N // 2, f.Nz // 2
    h, hz = f.h, f.hz
    P = 1 << int(math.ceil(math.log2(2 * nz1)))
    Ff = np.fft.fft(f.data, P, axis=2)
    Fg = np.fft.fft(g.data, P, axis=2)
    out = np.zeros((n1, n1, nz1), dtype=complex)
    ii = np.arange(n1) - c
    kk = np.arange(nz1) - cz
    nonzero = np.abs(f.data).max(axis=2) > 0
    for ia in range(n1):
        x0, x1 = max(0, ia - c), min(n1, ia + c + 1)
        for ib in range(n1):
            if not nonzero[ia, ib]:
                continue
            y0, y1 = max(0, ib - c), min(n1, ib + c + 1)
            conv = np.fft.ifft(Ff[ia, ib][None, None, :] * Fg[x0 - ia + c:x1 - ia + c, y0 - ib + c:y1 - ib + c],
                               axis=2)[..., :2 * nz1 - 1]
            a, b = ia - c, ib - c
            s = (b * ii[x0:x1, None] - a * ii[None, y0:y1]) * (h * h / hz)
            m = np.floor(s)
            lam = (s - m)[..., None]
            r0 = kk[None, None, :] + m.astype(int)[..., None] + 2 * cz
            v0 = _gather(conv, r0)
            v1 = _gather(conv, r0 + 1)
            out[x0:x1, y0:y1] += (1 - lam) * v0 + lam * v1
    out *= f.cell
    # mass defect: the full discrete convolution has sum(f) sum(g) cell^2 as total mass
    total = f.data.sum() * g.data.sum() * f.cell * f.cell
    loss = abs(total - out.sum() * f.cell)
    res = f.like(out, mass_loss=float(loss))
    if loss > 1e-6 * max(l1_norm(g), 1e-300) * max(l1_norm(f), 1.0):
        res.meta["mass_warning"] = True
    return res


def _gather(conv, r):
    valid = (r >= 0) & (r < conv.shape[-1])
    v = np.take_along_axis(conv, np.clip(r, 0, conv.shape[-1] - 1), axis=-1)
    return np.where(valid, v, 0)


def adjoint(f):
    return f.like(np.conj(f.data[::-1, ::-1, ::-1]))


def l1_norm(f):
    return float(np.abs(f.data).sum() * f.cell)


def sup_norm(f):
    return float(np.abs(f.data).max())


class HeisenbergAlgebra:
    """Backend namespace for the Leibniz and calculus engines (norm: L^1)."""

    name = "heisenberg"

    @staticmethod
    def mul(f, g):
        return group_convolve(f, g)

    @staticmethod
    def add(f, g):
        return f.like(f.data + g.data)

    @staticmethod
    def sub(f, g):
        return f.like(f.data - g.data)

    @staticmethod
    def scale(c, f):
        return f.like(c * f.data)

    @staticmethod
    def adjoint(f):
        return adjoint(f)

    @staticmethod
    def norm(f):
        return l1_norm(f)

    @staticmethod
    def zeros_like(f):
        return f.like(np.zeros_like(f.data))


H = HeisenbergAlgebra


# ------------------------------------------------------------- certificates

def _coordinate(axis):
    def op(f):
        return f.like(f.mesh()[axis] * f.data)
    return op


def delta_coordinate(c):
    """Multiplication by x, y (order 1) or z (order 2 with the commutator cross terms)."""
    idx = "xyz".index(c)
    dx = lz._cached(("hx",), lambda: lz.LeibnizCertificate("dx", _coordinate(0), 1, H, lz.identity(H), lz.identity(H)))
    dy = lz._cached(("hy",), lambda: lz.LeibnizCertificate("dy", _coordinate(1), 1, H, lz.identity(H), lz.identity(H)))
    if idx == 0:
        return dx
    if idx == 1:
        return dy

    def build():
        neg_y = lz.LeibnizCertificate("-dy", lambda f: f.like(-f.mesh()[1] * f.data), 1, H,
                                      lz.identity(H), lz.identity(H))
        return lz.LeibnizCertificate("dz", _coordinate(2), 2, H, lz.identity(H), lz.identity(H),
                                     [(dx, dy), (neg_y, dx)])
    return lz._cached(("hz",), build)


def wrong_dz_certificate():
    """dz with the cross terms dropped: the plain Leibniz rule, which fails."""
    return lz.LeibnizCertificate("dz[no cross]", _coordinate(2), 1, H, lz.identity(H), lz.identity(H))


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def partial(f, axis):
    """4th-order central difference (zero outside the box)."""
    d = f.data
    pad = [(0, 0)] * 3
    pad[axis] = (2, 2)
    p = np.pad(d, pad)
    n = d.shape[axis]
    out = np.zeros_like(d)
    for w, s in zip(_D1, range(-2, 3)):
        if w:
            out += w * np.take(p, np.arange(2 + s, 2 + s + n), axis=axis)
    return out / (f.h if axis < 2 else f.hz)


def right_invariant_field(v):
    """d/dt f(exp(tV) p) for V = v0 X + v1 Y + v2 Z:  X_R = dx + y dz, Y_R = dy - x dz, Z_R = dz."""
    v = np.asarray(v, dtype=float)

    def op(f):
        X, Y, _ = f.mesh()
        dz = partial(f, 2)
        out = np.zeros_like(f.data)
        if v[0]:
            out += v[0] * (partial(f, 0) + Y * dz)
        if v[1]:
            out += v[1] * (partial(f, 1) - X * dz)
        if v[2]:
            out += v[2] * dz
        return f.like(out)
    return op


_FIELD_NAMES = {"X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1)}


def right_invariant_derivative(v):
    """Order-0 certificate: V_R(f * g) = V_R(f) * g."""
    if isinstance(v, str):
        tag, v = f"{v}_R", _FIELD_NAMES[v]
    else:
        tag = f"R{tuple(float(t) for t in v)}"
    if not np.any(np.asarray(v)):
        return lz.zero(H)
    return lz.LeibnizCertificate(tag, right_invariant_field(v), 0, H)


@dataclass
class PolyDiffOp:
    """sum over terms of P(x, y, z) V_1R ... V_kR; P as {(i, j, k): coefficient}."""

    terms: list
    max_degree: int = 4

    def __post_init__(self):
        for poly, word in self.terms:
            for mi in poly:
                if sum(mi) > self.max_degree:
                    raise AlgebraError("degree", f"monomial {mi} exceeds degree {self.max_degree}")
            if len(word) > self.max_degree:
                raise AlgebraError("degree", f"word {word} exceeds length {self.max_degree}")

    def apply(self, f):
        X, Y, Z = f.mesh()
        out = np.zeros_like(f.data)
        for poly, word in self.terms:
            g = f
            for v in reversed(word):
                g = right_invariant_field(_FIELD_NAMES[v])(g)
            P = sum(c * X ** i * Y ** j * Z ** k for (i, j, k), c in poly.items())
            out += P * g.data
        return f.like(out)

    __call__ = apply


def certify_poly_op(D):
    """Certificate for D from coordinate and right-invariant certificates by sums and compositions."""
    total = None
    for poly, word in D.terms:
        wcert = None
        for v in word:
            c = right_invariant_derivative(v)
            wcert = c if wcert is None else lz.compose_certificates(wcert, c)
        for (i, j, k), coef in poly.items():
            mult = None
            for axis, p in zip("xyz", (i, j, k)):
                for _ in range(p):
                    c = delta_coordinate(axis)
                    mult = c if mult is None else lz.compose_certificates(mult, c)
            term = mult
            if wcert is not None:
                term = wcert if term is None else lz.compose_certificates(term, wcert)
            if coef != 1:
                s = lz.scalar_certificate(coef, H)
                term = s if term is None else lz.compose_certificates(s, term)
            if term is None:
                term = lz.identity(H)
            total = term if total is None else lz.sum_certificates(total, term)
    return total if total is not None else lz.zero(H)


# -------------------------------------------------------- regular representation

def rep_operator(f, cap=4096):
    """Matrix of g -> f * g on the grid (flattened in C order)."""
    n1, nz1 = f.N + 1, f.Nz + 1
    dim = n1 * n1 * nz1
    if dim > cap:
        raise AlgebraError("size", f"grid of {dim} points exceeds the cap {cap}")
    c, cz = f.N // 2, f.Nz // 2
    M = np.zeros((n1, n1, nz1, n1, n1, nz1), dtype=complex)
    ii = np.arange(n1) - c
    kk = np.arange(nz1) - cz
    for ia in range(n1):
        for ib in range(n1):
            if not np.any(f.data[ia, ib]):
                continue
            a, b = ia - c, ib - c
            for ix in range(max(0, ia - c), min(n1, ia + c + 1)):
                gx = ix - ia + c
                s = (b * ii[ix] - a * ii) * (f.h * f.h / f.hz)    # over output y
                m = np.floor(s).astype(int)
                lam = s - np.floor(s)
                for iy in range(max(0, ib - c), min(n1, ib + c + 1)):
                    gy = iy - ib + c
                    for kc in range(nz1):
                        fc = f.data[ia, ib, kc] * f.cell
                        if fc == 0:
                            continue
                        # g index in z: k - (kc - cz) + m (+1), array index adds cz
                        gz0 = kk - (kc - cz) + m[iy] + cz
                        for gz, w in ((gz0, 1 - lam[iy]), (gz0 + 1, lam[iy])):
                            ok = (gz >= 0) & (gz < nz1)
                            M[ix, iy, np.arange(nz1)[ok], gx, gy, gz[ok]] += fc * w
    return M.reshape(dim, dim)


def to_vector(f):
    return f.data.ravel()


def pullback(M, like):
    """Kernel whose convolution matrix has column M[:, origin]: the column divided by the cell volume."""
    n1, nz1 = like.N + 1, like.Nz + 1
    origin = np.ravel_multi_index((like.N // 2, like.N // 2, like.Nz // 2), (n1, n1, nz1))
    col = M[:, origin] if M.ndim == 2 else M
    return like.like(col.reshape(n1, n1, nz1) / like.cell)


def kernel_calc(a, fs, n=32, spectrum_bound=None):
    """Kernels of s_n(rep(a)) for self-adjoint ``a`` and each SampledFunction in ``fs``.

    Only the column at the origin is needed for the pullback, so the phase
    ladder runs on vectors: v_j = x e^{i j x/n} e_0 with x = rep(a).
    """
    from .funcalc import (exponential_tail, fourier_samples, frequency_grid,
                          truncation_order, unitary_step)
    x = rep_operator(a)
    if np.abs(x - x.conj().T).max() > 1e-12 * max(1.0, np.abs(x).max()):
        raise AlgebraError("non-self-adjoint", "kernel_calc needs a = a*")
    r = np.linalg.norm(x, 2)
    bound = r if spectrum_bound is None else spectrum_bound
    for f in fs:
        if bound >= f.L:
            raise AlgebraError("support", f"spectrum radius {bound:.3g} escapes the support of {f.name}")
    n1, nz1 = a.N + 1, a.Nz + 1
    e0 = np.zeros(x.shape[0], dtype=complex)
    e0[np.ravel_multi_index((a.N // 2, a.N // 2, a.Nz // 2), (n1, n1, nz1))] = 1.0
    J = n * n
    ghats = [fourier_samples(f.quotient_samples(), f.grid, frequency_grid(n)) for f in fs]
    sums = [np.zeros_like(e0) for _ in fs]
    for sign in (1, -1):
        u = unitary_step(x, sign / n)
        v = x @ e0
        for k in range(J + 1):
            if k:
                v = v + u @ v
            elif sign < 0:
                continue
            xi = sign * k / n
            w = v
            tail = exponential_tail(x, xi, truncation_order(n, xi), r=r)
            if tail is not None:
                w = v - tail @ e0
            for i, gh in enumerate(ghats):
                sums[i] += gh[J + sign * k] * w
    return [pullback(s / (2 * np.pi * n), a) for s in sums]


def schwartz_seminorm_group(f, D):
    return sup_norm(D(f))


def gaussian(alpha, prefactor=None):
    def fn(x, y, z):
        p = 1.0 if prefactor is None else prefactor(x, y, z)
        return p * np.exp(-alpha * (x * x + y * y + z * z))
    return fn


def default_corpus():
    """(name, fn) pairs: Gaussians with polynomial prefactors, alpha in {1, 2}."""
    out = []
    for alpha in (1.0, 2.0):
        out.append((f"g{alpha:g}", gaussian(alpha)))
        out.append((f"x*g{alpha:g}", gaussian(alpha, lambda x, y, z: x)))
        out.append((f"(1+yz)*g{alpha:g}", gaussian(alpha, lambda x, y, z: 1 + y * z)))
        out.append((f"(x2-z)*g{alpha:g}", gaussian(alpha, lambda x, y, z: x * x - z)))
    return out


def locked_sample(fn, N, Lz=4.5, lock=2.0):
    """Sample on the lattice-locked grid hz = 2 Lz/N, h = sqrt(hz/lock), xy half-width near Lz.

    Every z-shift b x - a y of the convolution is then a multiple of hz/lock.
    """
    hz = 2 * Lz / N
    h = math.sqrt(hz / lock)
    Nxy = 2 * math.ceil(Lz / h)
    return sample(fn, Nxy, h * Nxy / 2, N, Lz)


@dataclass
class DzStudy:
    rows: list          # (N, Nxy, h, residual of the correct rule, residual of the wrong rule)
    factors: list       # residual(N) / residual(2N) for each halving of the z-step

    @property
    def finest_gap(self):
        return self.rows[-1][4] / self.rows[-1][3]


def dz_refinement_study(Ns=(12, 16, 24, 32), Lz=4.5, lock=2.0, f=None, g=None):
    """Leibniz residuals of the z-multiplication rule (with and without cross terms).

    The grids are lattice-locked: hz = 2 Lz/N and h = sqrt(hz/lock), so the
    z-shift b x - a y, an integer multiple of h^2, always lands on the
    sub-lattice hz/lock.  The interpolation weights then repeat from one
    refinement to the next and the residual decays cleanly in the
    resolution N.  The xy box keeps its half-width near Lz.
    """
    f = f or gaussian(1.0, lambda x, y, z: 1 + 0.5 * x - 0.3 * y * z)
    g = g or gaussian(1.5, lambda x, y, z: 1 - 0.4 * y + 0.2 * x * z)
    dz, wrong = delta_coordinate("z"), wrong_dz_certificate()
    rows = []
    for N in Ns:
        a, b = locked_sample(f, N, Lz, lock), locked_sample(g, N, Lz, lock)
        rows.append((N, a.N, a.h, lz.leibniz_residual(dz, a, b, relative=False),
                     lz.leibniz_residual(wrong, a, b, relative=False)))
    res = {r[0]: r[3] for r in rows}
    factors = [res[N] / res[2 * N] for N in Ns if 2 * N in res]
    return DzStudy(rows, factors)


def depth2_operators():
    """Polynomial-coefficient operators with at most two factors from x, y, z, X_R, Y_R, Z_R."""
    gens = [("x", (1, 0, 0), ""), ("y", (0, 1, 0), ""), ("z", (0, 0, 1), ""),
            ("X", (0, 0, 0), "X"), ("Y", (0, 0, 0), "Y"), ("Z", (0, 0, 0), "Z")]
    ops = {"1": PolyDiffOp([({(0, 0, 0): 1.0}, "")])}
    for n1, m1, w1 in gens:
        ops[n1] = PolyDiffOp([({m1: 1.0}, w1)])
        for n2, m2, w2 in gens:
            # polynomial factors to the left of the word, as in P(x, y, z) V_1R ... V_kR
            if w1 and not w2:
                continue
            mono = tuple(a + b for a, b in zip(m1, m2))
            ops[n1 + n2] = PolyDiffOp([({mono: 1.0}, w1 + w2)])
    return ops


@dataclass
class ClosureStudy:
    Ns: tuple
    seminorms: dict             # operator name -> [value per N]
    worst_ratio: float
    worst_op: str


def schwartz_closure_study(fs, Ns=(8, 10), L=3.0, alpha=1.0, mass=0.5, n=16):
    """f(a) for a normalized Gaussian a, pulled back from rep(a), at two resolutions.

    Returns the depth-<=2 seminorms of f(a) on each grid and the largest
    ratio between consecutive grids.
    """
    ops = depth2_operators()
    vals = {k: [] for k in ops}
    for N in Ns:
        a = sample(gaussian(alpha), N, L)
        a = a.like(a.data * mass / l1_norm(a))
        ks = kernel_calc(a, fs, n=n)
        for name, D in ops.items():
            vals[name].append(max(schwartz_seminorm_group(k, D) for k in ks))
    worst, wop = 1.0, ""
    top = max(max(v) for v in vals.values())
    for name, v in vals.items():
        for p, q in zip(v, v[1:]):
            if max(p, q) <= 1e-8 * top:
                continue
            r = max(p, q) / max(min(p, q), 1e-300)
            if r > worst:
                worst, wop = r, name
    return ClosureStudy(tuple(Ns), vals, worst, wop)
