"""Smooth functional calculus on the groupoid: slice-spectral oracle versus the generic engine."""
from dataclasses import dataclass, field

import numpy as np

from ..algebra import AlgebraError
from ..funcalc import SampledFunction, bump, smooth_calc_self_adjoint
from .kernel import TangentAlgebra, cstar_norm, scale, sub
from .seminorms import compare_tables, seminorm_table


def _slice_calc(K, t, w, fn):
    A = w / t * K
    if np.max(np.abs(A - A.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(A))):
        raise AlgebraError("self-adjoint", f"slice t={t:g} is not Hermitian")
    lam, U = np.linalg.eigh(0.5 * (A + A.conj().T))
    return t / w * (U * fn(lam)) @ U.conj().T


def _zero_calc(F, vgrid, fn):
    Fh = vgrid.transform(F)
    if np.max(np.abs(Fh.imag)) > 1e-10 * max(1.0, np.max(np.abs(Fh))):
        raise AlgebraError("self-adjoint", "zero slice transform is not real")
    return vgrid.inverse(fn(Fh.real))


def oracle_calc(a, fn, radius=None):
    """f(a) slice by slice: f of the matrix (2 pi/N) t^{-1} K_t, and f of F_hat(., x) at t = 0.

    The result keeps a slice sampler when ``a`` has one.  ``radius`` bounds
    the spectrum check (default: the C*-norm of ``a``).
    """
    w = a.grid.weight
    if fn(np.zeros(1))[0] != 0:
        raise AlgebraError("domain", "f(0) must vanish (the groupoid algebra has no unit)")
    slices = np.array([_slice_calc(K, t, w, fn) for t, K in zip(a.ts, a.slices)])
    zero = _zero_calc(a.zero, a.vgrid, fn)
    sf = None
    if a.slice_fn is not None:
        sf = lambda t: _slice_calc(a.slice_at(t), t, w, fn)
    return a.like(slices, zero, sf, None, {"name": f"oracle[{a.meta.get('name', '')}]"})


def default_functions():
    """Three compactly supported functions vanishing at 0."""
    return [
        SampledFunction(lambda x: x * bump(x), 2.5, name="x*bump"),
        SampledFunction(lambda x: x ** 2 * bump(x), 2.5, name="x^2*bump"),
        SampledFunction(lambda x: np.sin(np.pi * x / 2) * bump(x), 2.5, name="sin(pi x/2)*bump"),
    ]


def normalize(a, target=0.9):
    """a scaled to C*-norm ``target`` (keeps the samplers)."""
    return scale(target / cstar_norm(a), a)


@dataclass
class TheoremAReport:
    name: str
    function: str
    cross_residual: float
    seminorms: object = field(repr=False, default=None)    # FinitenessReport or None


def theoremA_check(a, fs, n=24, a_refined=None, depth=2, rel=0.10):
    """Dual-method f(a) for each f in ``fs``.

    (i) ``oracle_calc``; (ii) the Riemann-sum engine on the groupoid backend.
    The cross residual is the C*-norm of the difference.  With ``a_refined``
    (the same kernel with N doubled on the same t-grid, see ``GridSpec.doubled``) the depth-``depth`` seminorm tables of
    the oracle result are compared for stability.
    """
    if any(f.fn(np.zeros(1))[0] != 0 for f in fs):
        raise AlgebraError("domain", "f(0) must vanish")
    radius = cstar_norm(a)
    for f in fs:
        if radius >= f.L:
            raise AlgebraError("support", f"spectrum radius {radius:.3g} escapes {f.name}")
    engine = smooth_calc_self_adjoint(a.bare(), fs, n_max=n, alg=TangentAlgebra, spectrum_bound=radius)
    out = []
    for f, e in zip(fs, engine):
        o = oracle_calc(a, f.fn)
        rep = TheoremAReport(a.meta.get("name", ""), f.name, cstar_norm(sub(o, e)))
        if a_refined is not None:
            o2 = oracle_calc(a_refined, f.fn)
            rep.seminorms = compare_tables(seminorm_table(o, depth), seminorm_table(o2, depth), rel)
        out.append(rep)
    return out
