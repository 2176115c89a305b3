"""Differential operators on *-algebras, witnessed by Leibniz certificates.

A certificate for an operator ``d`` of order ``n >= 1`` records operators
``d10, d20, (d1i, d2i)`` of lower order with

    d(ab) = d(a) d20(b) + d10(a) d(b) + sum_i d1i(a) d2i(b),

and ``d20(x*) = d20(x)*``.  Order 0 means ``d(ab) = d(a) b``.  Certificates
store structure only (closures plus tags), so the same code runs on dense
matrices, Heisenberg group kernels and tangent-groupoid kernels.
"""
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraError, MatrixAlgebra
from .config import DEFAULT


@dataclass(eq=False)
class LeibnizCertificate:
    tag: str
    apply: object
    order: int
    alg: object = MatrixAlgebra
    delta10: "LeibnizCertificate" = None
    delta20: "LeibnizCertificate" = None
    cross_terms: tuple = ()
    star_ok: bool = True

    def __post_init__(self):
        self.cross_terms = tuple(self.cross_terms)
        if self.order == 0:
            if self.delta10 is not None or self.delta20 is not None or self.cross_terms:
                raise AlgebraError("certificate", "order-0 certificates carry no family")
            return
        if self.delta10 is None or self.delta20 is None:
            raise AlgebraError("certificate", f"{self.tag}: order {self.order} needs delta10 and delta20")
        for c in self.family():
            if c.order >= self.order:
                raise AlgebraError(
                    "certificate", f"{self.tag}: constituent {c.tag} has order {c.order} >= {self.order}")

    def __call__(self, x):
        return self.apply(x)

    def family(self):
        if self.order == 0:
            return []
        out = [self.delta10, self.delta20]
        for l, r in self.cross_terms:
            out += [l, r]
        return out

    def expansion(self):
        """Pairs (L, R) with d(ab) = sum L(a) R(b); ``None`` stands for d itself."""
        if self.order == 0:
            return [(self, identity(self.alg))]
        return [(self, self.delta20), (self.delta10, self)] + list(self.cross_terms)

    def to_dict(self):
        d = {"tag": self.tag, "order": self.order, "star_ok": self.star_ok}
        if self.order:
            d["delta10"] = self.delta10.to_dict()
            d["delta20"] = self.delta20.to_dict()
            d["cross_terms"] = [[l.to_dict(), r.to_dict()] for l, r in self.cross_terms]
        return d

    def walk(self):
        """All certificates in the tree (each node once)."""
        seen, stack, out = set(), [self], []
        while stack:
            c = stack.pop()
            if id(c) in seen:
                continue
            seen.add(id(c))
            out.append(c)
            stack.extend(c.family())
        return out


@dataclass
class ResidualReport:
    max_residual: float
    sample_count: int
    worst_pair: int
    tol: float = field(default=DEFAULT.leibniz_exact)

    @property
    def passed(self):
        return self.max_residual <= self.tol


_CACHE = {}


def _cached(key, build):
    c = _CACHE.get(key)
    if c is None:
        c = _CACHE[key] = build()
    return c


def identity(alg=MatrixAlgebra):
    return _cached(("id", alg), lambda: LeibnizCertificate("id", lambda x: x, 0, alg))


def zero(alg=MatrixAlgebra):
    return _cached(("0", alg), lambda: LeibnizCertificate("0", alg.zeros_like, 0, alg))


def identity_order1(alg=MatrixAlgebra):
    """The identity written as an order-1 certificate: id(ab) = id(a) id(b)."""
    return LeibnizCertificate("id[1]", lambda x: x, 1, alg, zero(alg), identity(alg))


def scalar_certificate(lam, alg=MatrixAlgebra):
    lam = complex(lam)
    return LeibnizCertificate(f"{lam:g}", lambda x: alg.scale(lam, x), 0, alg)


def left_multiplication(m, alg=MatrixAlgebra, tag="L"):
    return LeibnizCertificate(tag, lambda x: alg.mul(m, x), 0, alg)


def commutator(d, alg=MatrixAlgebra, tag="ad"):
    """x -> dx - xd, an order-1 certificate with d10 = d20 = id."""
    return LeibnizCertificate(
        tag, lambda x: alg.sub(alg.mul(d, x), alg.mul(x, d)), 1, alg, identity(alg), identity(alg))


def derivation(op, tag, alg=MatrixAlgebra):
    """Wrap any map satisfying the plain Leibniz rule as an order-1 certificate."""
    return LeibnizCertificate(tag, op, 1, alg, identity(alg), identity(alg))


def _same_backend(c1, c2):
    if c1.alg is not c2.alg:
        raise AlgebraError("backend", f"{c1.alg.name} vs {c2.alg.name}")
    return c1.alg


def _order_from(family):
    return 1 + max(c.order for c in family)


def sum_certificates(c1, c2):
    """Certificate for c1 + c2: every term of both expansions goes to the cross terms."""
    alg = _same_backend(c1, c2)
    cross = [(l, r) for l, r in c1.expansion() + c2.expansion()]
    z = zero(alg)
    return LeibnizCertificate(
        f"({c1.tag} + {c2.tag})", lambda x: alg.add(c1(x), c2(x)),
        _order_from([z] + [c for pair in cross for c in pair]), alg, z, z, cross)


def linear_combination(terms, alg=MatrixAlgebra):
    """sum_k lam_k c_k via scalar composition and repeated sums."""
    out = None
    for lam, c in terms:
        c = c if lam == 1 else compose_certificates(scalar_certificate(lam, alg), c)
        out = c if out is None else sum_certificates(out, c)
    return out if out is not None else zero(alg)


def compose_certificates(c1, c2, max_depth=None, _memo=None, _depth=0):
    """Certificate for c1 o c2, assembled by the three-case induction on orders."""
    alg = _same_backend(c1, c2)
    max_depth = DEFAULT.max_recursion if max_depth is None else max_depth
    if _depth > max_depth:
        raise AlgebraError("recursion", f"composition depth exceeded {max_depth}")
    memo = {} if _memo is None else _memo
    key = (id(c1), id(c2))
    if key in memo:
        return memo[key]

    def comp(a, b):
        return compose_certificates(a, b, max_depth, memo, _depth + 1)

    tag = f"({c1.tag} o {c2.tag})"
    apply = (lambda x: c1(c2(x)))
    z = zero(alg)
    if c1.order == 0 and c2.order == 0:
        out = LeibnizCertificate(tag, apply, 0, alg)
    elif c2.order == 0:
        # d(d'(ab)) = d(d'(a)) d20(b) + d10(d'(a)) d(b) + sum d1i(d'(a)) d2i(b)
        cross = [(comp(c1.delta10, c2), c1)] + [(comp(l, c2), r) for l, r in c1.cross_terms]
        d20 = c1.delta20
        out = LeibnizCertificate(tag, apply, _order_from([z, d20] + [c for p in cross for c in p]),
                                 alg, z, d20, cross, c1.delta20.star_ok)
    elif c1.order == 0:
        # d(d'(ab)) = d(d'(a)) d'20(b) + d(d'10(a)) d'(b) + sum d(d'1i(a)) d'2i(b)
        cross = [(comp(c1, c2.delta10), c2)] + [(comp(c1, l), r) for l, r in c2.cross_terms]
        d20 = c2.delta20
        out = LeibnizCertificate(tag, apply, _order_from([z, d20] + [c for p in cross for c in p]),
                                 alg, z, d20, cross, c2.delta20.star_ok)
    else:
        d20 = comp(c1.delta20, c2.delta20)
        d10 = comp(c1.delta10, c2.delta10)
        cross = [(comp(c1.delta10, c2), comp(c1, c2.delta20))]
        cross += [(comp(l, c2), comp(r, c2.delta20)) for l, r in c1.cross_terms]
        cross += [(comp(c1, c2.delta10), comp(c1.delta20, c2))]
        cross += [(comp(l, c2.delta10), comp(r, c2)) for l, r in c1.cross_terms]
        for lj, rj in c2.cross_terms:
            cross += [(comp(c1, lj), comp(c1.delta20, rj)), (comp(c1.delta10, lj), comp(c1, rj))]
            cross += [(comp(l, lj), comp(r, rj)) for l, r in c1.cross_terms]
        out = LeibnizCertificate(tag, apply, _order_from([d10, d20] + [c for p in cross for c in p]),
                                 alg, d10, d20, cross, c1.delta20.star_ok and c2.delta20.star_ok)
    memo[key] = out
    return out


def check_leibniz(cert, a, b, tol=None, relative=True):
    """Residual of the certificate's Leibniz identity on one pair.

    With ``relative`` the residual is divided by ``max(1, |d(ab)|, sum |terms|)``.
    """
    tol = DEFAULT.leibniz_exact if tol is None else tol
    return check_leibniz_sample(cert, [(a, b)], tol, relative)


def leibniz_residual(cert, a, b, relative=True, expansion=None):
    alg = cert.alg
    lhs = cert(alg.mul(a, b))
    rhs = None
    scale = alg.norm(lhs)
    for l, r in (cert.expansion() if expansion is None else expansion):
        term = alg.mul(l(a), r(b))
        scale += alg.norm(term)
        rhs = term if rhs is None else alg.add(rhs, term)
    res = alg.norm(alg.sub(lhs, rhs))
    return res / max(1.0, scale) if relative else res


def check_leibniz_sample(cert, pairs, tol=None, relative=True):
    tol = DEFAULT.leibniz_exact if tol is None else tol
    vals = [leibniz_residual(cert, a, b, relative) for a, b in pairs]
    worst = int(np.argmax(vals))
    return ResidualReport(float(vals[worst]), len(vals), worst, tol)


def check_star_condition(cert, sample, tol=None):
    tol = DEFAULT.leibniz_exact if tol is None else tol
    if cert.delta20 is None:
        raise AlgebraError("certificate", f"{cert.tag} has no delta20 slot")
    alg, d20 = cert.alg, cert.delta20
    vals = []
    for x in sample:
        vals.append(alg.norm(alg.sub(d20(alg.adjoint(x)), alg.adjoint(d20(x)))))
    worst = int(np.argmax(vals))
    return ResidualReport(float(vals[worst]), len(vals), worst, tol)


class BlockAlgebra:
    """n x n matrices over a base algebra; elements are nested lists of base elements.

    The norm is the max over entries of the base norm, equivalent to the
    C*-norm of M_n(A) up to a factor n.
    """

    def __init__(self, base, n):
        self.base, self.n = base, n
        self.name = f"M{n}({base.name})"

    def _map(self, fn, *xs):
        return [[fn(*(x[i][j] for x in xs)) for j in range(self.n)] for i in range(self.n)]

    def mul(self, a, b):
        out = []
        for i in range(self.n):
            row = []
            for j in range(self.n):
                acc = self.base.mul(a[i][0], b[0][j])
                for k in range(1, self.n):
                    acc = self.base.add(acc, self.base.mul(a[i][k], b[k][j]))
                row.append(acc)
            out.append(row)
        return out

    def add(self, a, b):
        return self._map(self.base.add, a, b)

    def sub(self, a, b):
        return self._map(self.base.sub, a, b)

    def scale(self, c, a):
        return self._map(lambda x: self.base.scale(c, x), a)

    def adjoint(self, a):
        return [[self.base.adjoint(a[j][i]) for j in range(self.n)] for i in range(self.n)]

    def norm(self, a):
        return max(self.base.norm(x) for row in a for x in row)

    def zeros_like(self, a):
        return self._map(self.base.zeros_like, a)

    @staticmethod
    def from_matrix(m, n):
        d = m.shape[0] // n
        return [[m[i * d:(i + 1) * d, j * d:(j + 1) * d] for j in range(n)] for i in range(n)]

    @staticmethod
    def to_matrix(blocks):
        return np.block(blocks)


def matrix_lift(cert, n, _memo=None):
    """Entrywise lift M_n(d) on M_n of the certificate's backend; order preserved."""
    memo = {} if _memo is None else _memo
    if id(cert) in memo:
        return memo[id(cert)]
    key = ("block", cert.alg, n)
    balg = _CACHE.get(key)
    if balg is None:
        balg = _CACHE[key] = BlockAlgebra(cert.alg, n)
    apply = (lambda x, c=cert: balg._map(c, x))
    if cert.order == 0:
        out = LeibnizCertificate(f"M{n}[{cert.tag}]", apply, 0, balg)
    else:
        lift = (lambda c: matrix_lift(c, n, memo))
        out = LeibnizCertificate(f"M{n}[{cert.tag}]", apply, cert.order, balg,
                                 lift(cert.delta10), lift(cert.delta20),
                                 [(lift(l), lift(r)) for l, r in cert.cross_terms], cert.star_ok)
    memo[id(cert)] = out
    return out
