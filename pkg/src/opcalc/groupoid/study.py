"""Corpus-level checks on the groupoid model: algebra laws, Leibniz rules, verdicts."""
from dataclasses import dataclass, field

import numpy as np

from .corpus import GridSpec, by_name, corpus, negative_controls, schwartz_corpus
from .kernel import add, adjoint, convolve, relative_gap, sub
from .operators import (COS, DTHETA, LAPLACIAN, SECOND_FRAME, SIN, STANDARD_FRAME, CircleOperator,
                        delta_D, hat_delta, lift_left, lift_right)
from .seminorms import GENERATORS, compare_tables, remark_seminorms, seminorm_table

LEFT_OPS = (DTHETA, LAPLACIAN, CircleOperator.vector_field(SIN))
RIGHT_OPS = (DTHETA, LAPLACIAN, CircleOperator.function(COS))
DELTA_OPS = (CircleOperator.function(COS), DTHETA, CircleOperator.vector_field(SIN))


def _gap(a, b):
    return relative_gap(a, b)


def _zero_gap(a, b):
    scale = max(1.0, np.max(np.abs(a.zero)), np.max(np.abs(b.zero)))
    return float(np.max(np.abs(a.zero - b.zero)) / scale)


def algebra_laws(kernels):
    """Largest relative residual of each *-algebra and module identity over consecutive kernel triples."""
    out = {k: 0.0 for k in ("associativity", "double_adjoint", "adjoint_antihom", "zero_commutativity",
                            "module_left", "module_right", "delta_leibniz", "composition_law")}
    n = len(kernels)
    comp = (CircleOperator.function(COS), DTHETA, CircleOperator([None, COS], "cos d"))
    for i in range(n):
        f, g, h = kernels[i], kernels[(i + 1) % n], kernels[(i + 2) % n]
        fg = convolve(f, g)
        r = out
        r["associativity"] = max(r["associativity"], _gap(convolve(fg, h), convolve(f, convolve(g, h))))
        r["double_adjoint"] = max(r["double_adjoint"], _gap(adjoint(adjoint(f)), f))
        r["adjoint_antihom"] = max(r["adjoint_antihom"], _gap(adjoint(fg), convolve(adjoint(g), adjoint(f))))
        r["zero_commutativity"] = max(r["zero_commutativity"], _zero_gap(fg, convolve(g, f)))
        for D in LEFT_OPS:
            r["module_left"] = max(r["module_left"],
                                   _gap(convolve(lift_left(D, f), g), lift_left(D, fg)))
        for D in RIGHT_OPS:
            r["module_right"] = max(r["module_right"],
                                    _gap(convolve(lift_right(D, f), g), convolve(f, lift_left(D, g))))
        for D in DELTA_OPS:
            rhs = add(convolve(delta_D(D, f), g), convolve(f, delta_D(D, g)))
            r["delta_leibniz"] = max(r["delta_leibniz"], _gap(delta_D(D, fg), rhs))
        # delta_{D1 D2} = delta_{D1} * D2-lift + D1-lift * delta_{D2} with D1 = cos, D2 = d
        D1, D2, D12 = comp
        rhs = add(lift_right(D2, delta_D(D1, f)), lift_left(D1, delta_D(D2, f)))
        r["composition_law"] = max(r["composition_law"], _gap(delta_D(D12, f), rhs))
    return out


@dataclass
class HatLeibnizReport:
    slice_residual: float       # t > 0 slices, relative to the sup of hat(f g)
    full_residual: float        # including the t -> 0 slice
    scale: float
    flags: list = field(default_factory=list)


def hat_leibniz(f, g, frame=STANDARD_FRAME, mode="sampler"):
    """Residual of hat(f g) = hat(f) g + f hat(g) + sum_i delta_{X_i}(f) delta_{f_i}(g)."""
    fg = convolve(f, g)
    lhs = hat_delta(fg, frame, mode)
    rhs = add(convolve(hat_delta(f, frame, mode), g), convolve(f, hat_delta(g, frame, mode)))
    for gi, Xi in zip(frame.functions, frame.fields):
        rhs = add(rhs, convolve(delta_D(CircleOperator.vector_field(Xi), f),
                                delta_D(CircleOperator.function(gi), g)))
    d = sub(lhs, rhs)
    scale = max(1.0, lhs.sup())
    s = float(np.max(np.abs(d.slices))) / scale
    full = max(s, float(np.max(np.abs(d.zero))) / scale)
    return HatLeibnizReport(s, full, scale, list(lhs.meta.get("flags", [])))


def frame_trace_error(N=256):
    """max over theta of |sum_i X_i(f_i) - 1| for the shipped frames."""
    th = 2 * np.pi * np.arange(N) / N
    return max(float(np.max(np.abs(fr.trace(th) - 1.0))) for fr in (STANDARD_FRAME, SECOND_FRAME))


def frame_difference(expr, spec=GridSpec()):
    """sup |(hat - hat')(f)| for the two frames on ``spec`` and on N doubled (same t-grid)."""
    vals = []
    for sp in (spec, spec.doubled()):
        f = expr.kernel(*sp.build())
        vals.append(sub(hat_delta(f, STANDARD_FRAME), hat_delta(f, SECOND_FRAME)).sup())
    return vals


@dataclass
class Verdict:
    name: str
    expected_fail: bool
    generator: object               # FinitenessReport
    clauses: dict                   # clause -> FinitenessReport

    @property
    def generator_finite(self):
        return self.generator.finite

    @property
    def clauses_finite(self):
        return all(r.finite for r in self.clauses.values())

    @property
    def agree(self):
        return self.generator_finite == self.clauses_finite

    @property
    def correct(self):
        return self.generator_finite != self.expected_fail and self.agree


def schwartz_verdict(expr, spec=GridSpec(), depth=2, rel=0.10):
    """Generator-word and coordinate-clause finiteness for one kernel.

    Both compare the kernel on ``spec`` with the same closed form on
    ``spec.extended()`` (N, t-range and v-box doubled).
    """
    a = expr.kernel(*spec.build())
    b = expr.kernel(*spec.extended().build())
    gen = compare_tables(seminorm_table(a, depth), seminorm_table(b, depth), rel)
    return Verdict(expr.name, expr.expected_fail, gen, remark_seminorms(a, b, rel))


def corpus_verdicts(spec=GridSpec(), include_controls=True, depth=2):
    return [schwartz_verdict(e, spec, depth) for e in corpus(include_controls)]


def example_word_table(spec=GridSpec(), depth=3, rel=0.10, floor=1e-4):
    """The embedding Gaussian (gauss-a1): every word up to ``depth`` on ``spec`` vs N doubled (same t-grid).

    The kernel is rotation invariant, so every word containing dD vanishes;
    nested t-stencils leave such words at up to 1e-5 of the largest entry,
    hence the noise ``floor``.
    """
    e = by_name("gauss-a1")
    a = e.kernel(*spec.build())
    b = e.kernel(*spec.doubled().build())
    return compare_tables(seminorm_table(a, depth), seminorm_table(b, depth), rel, floor)


__all__ = ["algebra_laws", "hat_leibniz", "HatLeibnizReport", "frame_trace_error", "frame_difference",
           "Verdict", "schwartz_verdict", "corpus_verdicts", "example_word_table", "GENERATORS",
           "schwartz_corpus", "negative_controls"]
