"""Pushing a certified differential operator through powers and exponentials.

Given a sequence ``x_n`` and the images ``c(x_n)`` of every operator ``c`` in a
certificate tree, the Leibniz identity of each node determines ``c`` on every
polynomial in ``x_n``.  :class:`JetAlgebra` carries an element together with
all these images and multiplies by the Leibniz rule, so the power recursion

    d(x^{m+1}) = d(x^m) d20(x) + d10(x^m) d(x) + sum_i d1i(x^m) d2i(x)

is the jet product ``jet(x^m) * jet(x)``.  Since jets support products, sums
and scalars, the truncated exponentials of :mod:`opcalc.funcalc` run on them
unchanged and return ``d(x_{n,xi})`` alongside ``x_{n,xi}``.
"""
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraError, MatrixAlgebra
from .funcalc import exponential_tail, phase_ladder, truncated_exponential, truncation_order


class DerivationTrace:
    """Elements x_1..x_N (approximating ``a``) and recorded images c(x_n), c(x_n^*)."""

    def __init__(self, elements, alg=MatrixAlgebra, self_adjoint=None):
        self.elements = list(elements)
        self.alg = alg
        if self_adjoint is None:
            self_adjoint = [alg.norm(alg.sub(x, alg.adjoint(x))) <= 1e-12 * max(1.0, alg.norm(x))
                            for x in self.elements]
        self.self_adjoint = list(self_adjoint)
        self.images = {}
        self.star_images = {}

    def __len__(self):
        return len(self.elements)

    def record(self, cert):
        """Apply every operator of the certificate tree to every element."""
        for node in cert.walk():
            if node not in self.images:
                self.images[node] = [node(x) for x in self.elements]
                self.star_images[node] = [node(self.alg.adjoint(x)) for x in self.elements]
        return self

    def image(self, node, n):
        try:
            return self.images[node][n]
        except KeyError:
            raise AlgebraError("trace", f"no recorded images for {node.tag}") from None

    def fingerprint(self):
        """Hash of the elements and of the tags of the recorded operators (16 hex digits)."""
        h = hashlib.sha256()
        for x in self.elements:
            h.update(np.ascontiguousarray(getattr(x, "data", x)).tobytes())
        for tag in sorted(c.tag for c in self.images):
            h.update(tag.encode())
        return h.hexdigest()[:16]

    def images_by_tag(self):
        return {c.tag: v for c, v in self.images.items()}

    def converges(self, limit, tol):
        """x_N within ``tol`` of ``limit`` and every image sequence settling over the last 3 steps."""
        alg = self.alg
        ok = alg.norm(alg.sub(self.elements[-1], limit)) <= tol
        for imgs in list(self.images.values()) + list(self.star_images.values()):
            if len(imgs) >= 4:
                d = [alg.norm(alg.sub(imgs[k], imgs[k - 1])) for k in range(len(imgs) - 3, len(imgs))]
                ok = ok and all(d[i + 1] <= d[i] + 1e-15 for i in range(len(d) - 1))
        return bool(ok)


class JetAlgebra:
    """Backend whose elements are (value, images of every tree node)."""

    def __init__(self, cert):
        self.cert = cert
        self.base = cert.alg
        self.nodes = cert.walk()
        self.index = {id(c): i for i, c in enumerate(self.nodes)}
        self.name = f"jet[{cert.tag}]"
        self._plans = []
        for c in self.nodes:
            if c.order == 0:
                self._plans.append(None)
            else:
                pairs = [(c, c.delta20), (c.delta10, c)] + list(c.cross_terms)
                self._plans.append([(self.index[id(l)], self.index[id(r)]) for l, r in pairs])

    def lift(self, trace, n):
        x = trace.elements[n]
        return (x, [trace.image(c, n) for c in self.nodes])

    def root(self, jet):
        return jet[1][0]

    def mul(self, a, b):
        B = self.base
        va, ia = a
        vb, ib = b
        imgs = []
        for c, plan in enumerate(self._plans):
            if plan is None:
                imgs.append(B.mul(ia[c], vb))
                continue
            acc = None
            for l, r in plan:
                t = B.mul(ia[l], ib[r])
                acc = t if acc is None else B.add(acc, t)
            imgs.append(acc)
        return (B.mul(va, vb), imgs)

    def add(self, a, b):
        B = self.base
        return (B.add(a[0], b[0]), [B.add(p, q) for p, q in zip(a[1], b[1])])

    def sub(self, a, b):
        B = self.base
        return (B.sub(a[0], b[0]), [B.sub(p, q) for p, q in zip(a[1], b[1])])

    def scale(self, c, a):
        B = self.base
        return (B.scale(c, a[0]), [B.scale(c, p) for p in a[1]])

    def norm(self, a):
        return self.base.norm(a[0])

    def zeros_like(self, a):
        return (self.base.zeros_like(a[0]), [self.base.zeros_like(p) for p in a[1]])

    def adjoint(self, a):
        raise AlgebraError("jet", "images of adjoints are not determined by the jet")


def delta_powers(cert, trace, n, m_max):
    """[d(x_n^1), ..., d(x_n^{m_max})] by the power recursion."""
    if m_max < 1:
        return []
    jalg = JetAlgebra(cert)
    x = jalg.lift(trace, n)
    out, p = [jalg.root(x)], x
    for _ in range(m_max - 1):
        p = jalg.mul(p, x)
        out.append(jalg.root(p))
    return out


def delta_power(cert, trace, n, m):
    """d(x_n^{m+1}); m = 0 gives the recorded d(x_n)."""
    return delta_powers(cert, trace, n, m + 1)[-1]


@dataclass
class BoundFit:
    order_estimate: float
    C1: float
    C2: float
    max_ratio: float
    data: np.ndarray = field(default=None, repr=False)
    trace_hash: str = ""            # DerivationTrace.fingerprint() of the input

    def to_record(self, n=-1):
        """JSON-ready result record keyed by the input trace."""
        return {"input_hash": self.trace_hash, "n": n, "order_estimate": self.order_estimate,
                "C1": self.C1, "C2": self.C2, "max_ratio": self.max_ratio}

    def bound(self, m):
        m = np.asarray(m, dtype=float)
        return self.C1 * m ** self.order_estimate * self.C2 ** m


def fit_power_bound(cert, trace, n=-1, m_max=40):
    """Least-squares fit log|d(x^m)| ~ log C1 + l log m + m log C2 over m = 1..m_max.

    C1 is then raised by the largest data/fit ratio so that the fitted curve
    is a bound; ``max_ratio`` records that factor.
    """
    if m_max < 8:
        raise AlgebraError("fit", "m_max must be at least 8")
    alg = cert.alg
    data = np.array([alg.norm(p) for p in delta_powers(cert, trace, n, m_max)])
    m = np.arange(1, m_max + 1, dtype=float)
    keep = data > 1e-300
    if keep.sum() < 3:
        return BoundFit(0.0, 0.0, 1.0, 0.0, data, trace.fingerprint())
    A = np.column_stack([np.ones(keep.sum()), np.log(m[keep]), m[keep]])
    coef, *_ = np.linalg.lstsq(A, np.log(data[keep]), rcond=None)
    logc1, l, logc2 = coef
    fit = np.exp(logc1 + l * np.log(m) + logc2 * m)
    ratio = float(np.max(data / fit))
    return BoundFit(float(l), float(np.exp(logc1) * max(ratio, 1.0)), float(np.exp(logc2)), ratio, data,
                    trace.fingerprint())


def delta_exponential(cert, trace, n, xi, method="stable"):
    """d(x_{n,xi}) for the truncated exponential of x_n.

    ``direct``: the finite sum sum_m (i xi)^m d(x^{m+1})/m! of recursion terms.
    ``stable``: the same quantity from the jet of x_{n,xi} (see funcalc).
    """
    if method == "direct":
        M = truncation_order(_trunc_n(trace, n), xi)
        powers = delta_powers(cert, trace, n, M + 1)
        alg = cert.alg
        out = None
        coef = 1.0 + 0j
        for m, p in enumerate(powers):
            if m:
                coef *= 1j * xi / m
            t = alg.scale(coef, p)
            out = t if out is None else alg.add(out, t)
        return out
    jalg = JetAlgebra(cert)
    x = jalg.lift(trace, n)
    return jalg.root(truncated_exponential(x, _trunc_n(trace, n), xi, jalg))


def _trunc_n(trace, n):
    # the truncation index is the position in the sequence (1-based)
    return len(trace) if n == -1 else n + 1


def exponential_images(cert, trace, n, xi_max, step):
    """d(x_{n,xi}) for xi = k*step, |xi| <= xi_max, via a jet phase ladder.

    Returns (xis, images) sorted by xi.
    """
    jalg = JetAlgebra(cert)
    x = jalg.lift(trace, n)
    r = jalg.norm(x)
    count = int(math.floor(xi_max / step + 1e-9))
    nn = _trunc_n(trace, n)
    xis, imgs = [], []
    for sign in (-1, 1):
        for k, y in enumerate(phase_ladder(x, sign * step, count, jalg)):
            if sign < 0 and k == 0:
                continue
            xi = sign * k * step
            tail = exponential_tail(x, xi, truncation_order(nn, xi), jalg, r=r)
            if tail is not None:
                y = jalg.sub(y, tail)
            xis.append(xi)
            imgs.append(jalg.root(y))
    order = np.argsort(xis)
    return np.array(xis)[order], [imgs[i] for i in order]


def check_exponential_bound(cert, trace, xi_max=50.0, step=0.25, n=-1, order=None):
    """sup_xi |d(x_{n,xi})| / (|xi|^l + 1) over the grid |xi| <= xi_max."""
    l = cert.order if order is None else order
    xis, imgs = exponential_images(cert, trace, n, xi_max, step)
    norms = np.array([cert.alg.norm(v) for v in imgs])
    ratios = norms / (np.abs(xis) ** l + 1.0)
    C = float(ratios.max())
    return BoundFit(float(l), C, 1.0, C, ratios, trace.fingerprint())


def exponential_bound_stability(cert, trace, xi_max=50.0, step=0.25, n=-1):
    """(C on [-xi_max/2, xi_max/2], C on [-xi_max, xi_max]) from one sweep."""
    l = cert.order
    xis, imgs = exponential_images(cert, trace, n, xi_max, step)
    ratios = np.array([cert.alg.norm(v) for v in imgs]) / (np.abs(xis) ** l + 1.0)
    half = np.abs(xis) <= xi_max / 2 + 1e-12
    return float(ratios[half].max()), float(ratios.max())


def beta_identity_check(j, m):
    """| (1/((j-1)!(m-j)!)) int_0^1 s^{j-1}(1-s)^{m-j} ds - 1/m! | by Gauss-Legendre quadrature."""
    if not 1 <= j <= m <= 20:
        raise AlgebraError("domain", "need 1 <= j <= m <= 20")
    nodes, weights = np.polynomial.legendre.leggauss(16)   # exact up to degree 31
    s = 0.5 * (nodes + 1.0)
    val = 0.5 * np.sum(weights * s ** (j - 1) * (1 - s) ** (m - j))
    val /= math.factorial(j - 1) * math.factorial(m - j)
    return abs(val - 1.0 / math.factorial(m))
