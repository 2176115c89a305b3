"""Dense complex matrices as the reference C*-algebra, plus spectral oracles.

Elements are plain square ``numpy`` arrays.  Every approximation elsewhere in
the package is validated against the two oracles here:

* :func:`oracle_smooth_calc` -- f applied to the eigenvalues of a unitary
  (Schur) diagonalisation of a normal matrix;
* :func:`oracle_holo_calc` -- trapezoid quadrature of the Cauchy integral
  ``(1/2 pi i) \\oint g(w) a (w - a)^{-1} dw`` with ``g(w) = f(w) / w`` and exact
  linear solves.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .config import DEFAULT


class AlgebraError(ValueError):
    """Structured error raised on invalid algebra input."""

    def __init__(self, kind, message):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


def as_element(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise AlgebraError("shape", f"expected a square matrix, got shape {a.shape}")
    return a.astype(complex, copy=False)


def mul(a, b):
    a, b = as_element(a), as_element(b)
    if a.shape != b.shape:
        raise AlgebraError("dimension", f"{a.shape} vs {b.shape}")
    return a @ b


def adjoint(a):
    return as_element(a).conj().T


def norm(a):
    """Operator norm (largest singular value)."""
    a = as_element(a)
    if a.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(a)[0])


def normality_residual(a):
    a = as_element(a)
    ah = a.conj().T
    return norm(ah @ a - a @ ah)


def is_normal(a, tol=None):
    tol = DEFAULT.normality if tol is None else tol
    na = norm(a)
    return normality_residual(a) <= tol * max(na * na, 1e-300)


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    is_normal: bool
    normality_residual: float


def spectrum(a):
    a = as_element(a)
    try:
        eig = scipy.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise AlgebraError("eigensolver", str(exc)) from exc
    res = normality_residual(a)
    na = norm(a)
    return SpectrumReport(eig, bool(res <= DEFAULT.normality * max(na * na, 1e-300)), res)


def _evaluate(f, z):
    if hasattr(f, "evaluate"):
        return f.evaluate(z)
    return np.asarray(f(z), dtype=complex)


def oracle_smooth_calc(a, f, tol=None):
    """f(a) for normal ``a`` via a complex Schur form.

    For a normal matrix the Schur factor is diagonal up to rounding, so
    ``a = Z diag(lam) Z^*`` with ``Z`` unitary.
    """
    a = as_element(a)
    tol = DEFAULT.normality if tol is None else tol
    na = norm(a)
    if na == 0.0:
        val = _evaluate(f, np.zeros(1))[0]
        return np.full_like(a, 0.0) if val == 0 else val * np.eye(a.shape[0])
    if normality_residual(a) > tol * na * na:
        raise AlgebraError("non-normal", "smooth calculus oracle needs a normal element")
    T, Z = scipy.linalg.schur(a, output="complex")
    lam = np.diag(T)
    vals = _evaluate(f, lam)
    if not np.all(np.isfinite(vals)):
        raise AlgebraError("domain", "f is undefined at an eigenvalue")
    return (Z * vals) @ Z.conj().T


@dataclass
class Contour:
    """Closed contour given by quadrature nodes ``w_k`` and weights ``dw_k``."""

    nodes: np.ndarray
    weights: np.ndarray
    min_distance: float = field(default=DEFAULT.contour_min_distance)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=complex)
        self.weights = np.asarray(self.weights, dtype=complex)
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise AlgebraError("contour", "nodes and weights must be matching 1-d arrays")
        if abs(self.weights.sum()) > 1e-8 * np.abs(self.weights).sum():
            raise AlgebraError("contour", "path is not closed")
        if np.min(np.abs(self.nodes)) < self.min_distance:
            raise AlgebraError("contour", "0 lies too close to the contour")

    @classmethod
    def circle(cls, center, radius, n=None, min_distance=DEFAULT.contour_min_distance):
        n = DEFAULT.contour_nodes if n is None else n
        theta = 2 * np.pi * np.arange(n) / n
        nodes = center + radius * np.exp(1j * theta)
        weights = 1j * radius * np.exp(1j * theta) * (2 * np.pi / n)
        return cls(nodes, weights, min_distance)

    @classmethod
    def around(cls, a, n=None, scale=1.5):
        """Default contour: circle at the spectral centroid, radius ``scale``
        times the spectral radius about it, pushed outwards until 0 is clear."""
        lam = scipy.linalg.eigvals(as_element(a))
        c = lam.mean()
        r = max(scale * np.max(np.abs(lam - c)), 0.5)
        while np.min(np.abs(np.abs(c) - r)) < DEFAULT.contour_min_distance:
            r *= 1.25
        return cls.circle(c, r, n)

    @classmethod
    def enclosing(cls, a, n=None, scale=3.0):
        """Circle at the spectral centroid c with radius ``scale`` * ||a - c||.

        The norm bounds every pseudospectrum, so the contour stays far from
        the spectrum even for defective matrices whose eigenvalues coincide.
        """
        a = as_element(a)
        c = scipy.linalg.eigvals(a).mean()
        r = scale * max(norm(a - c * np.eye(a.shape[0])), 1e-3)
        while abs(abs(c) - r) < DEFAULT.contour_min_distance:
            r *= 1.25
        return cls.circle(c, r, n)

    def half(self):
        return Contour(self.nodes[::2], 2 * self.weights[::2], self.min_distance)

    def winding(self, z):
        """Winding number about ``z`` by the argument principle on the polygon."""
        w = np.append(self.nodes, self.nodes[0]) - z
        return float(np.sum(np.angle(w[1:] / w[:-1])) / (2 * np.pi))


def oracle_holo_calc(a, f, contour, tol=None):
    a = as_element(a)
    tol = DEFAULT.eigen_distance if tol is None else tol
    lam = scipy.linalg.eigvals(a)
    dist = np.min(np.abs(contour.nodes[:, None] - lam[None, :]))
    if dist < tol * max(1.0, norm(a)):
        raise AlgebraError("contour", "contour passes through the spectrum")
    for z in lam:
        if round(contour.winding(z)) != 1:
            raise AlgebraError("contour", f"eigenvalue {z} is not enclosed")
    eye = np.eye(a.shape[0])
    out = np.zeros_like(a)
    for w, dw in zip(contour.nodes, contour.weights):
        g = _evaluate(f, np.array([w]))[0] / w
        out += g * dw * scipy.linalg.solve(w * eye - a, a)
    return out / (2j * np.pi)


def holo_error_estimate(a, f, contour):
    """Node-doubling error estimate for :func:`oracle_holo_calc`."""
    full = oracle_holo_calc(a, f, contour)
    return full, norm(full - oracle_holo_calc(a, f, contour.half()))


class MatrixAlgebra:
    """Operations namespace used by the generic engines in :mod:`opcalc.funcalc`."""

    name = "matrix"

    @staticmethod
    def mul(a, b):
        return a @ b

    @staticmethod
    def adjoint(a):
        return a.conj().T

    @staticmethod
    def norm(a):
        return norm(a)

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def scale(c, a):
        return c * a

    @staticmethod
    def zeros_like(a):
        return np.zeros_like(a, dtype=complex)

    @staticmethod
    def diff_norm(a, b):
        return norm(a - b)


def random_unitary(dim, rng):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim, rng, scale=1.0):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (z + z.conj().T) / 2
    return scale * h / norm(h)


def random_normal(dim, rng, radius=1.0, real_spectrum=False):
    """Random normal matrix with spectrum inside the disc (or interval) of ``radius``."""
    u = random_unitary(dim, rng)
    if real_spectrum:
        lam = rng.uniform(-radius, radius, dim)
    else:
        r = radius * np.sqrt(rng.uniform(0, 1, dim))
        lam = r * np.exp(2j * np.pi * rng.uniform(0, 1, dim))
    return (u * lam) @ u.conj().T
