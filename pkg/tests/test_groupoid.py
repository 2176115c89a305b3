"""Tangent groupoid of the circle: grids, kernel algebra, lifted operators, seminorms, Sobolev, calculus."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opcalc.algebra import AlgebraError
from opcalc.funcalc import SampledFunction, bump
from opcalc.groupoid.corpus import (GridSpec, by_name, file_stem, load_kernel, negative_controls,
                                    save_kernel, schwartz_corpus)
from opcalc.groupoid.grid import CircleGrid, VGrid, log_derivative, log_derivative_at, t_grid
from opcalc.groupoid.kernel import (adjoint, convolve, cstar_norm, discrete_unit, l1_bounds, pi_t_norm,
                                    pi_x_norms, scale)
from opcalc.groupoid.operators import (COS, DTHETA, SIN, CircleFunction, CircleOperator, constant,
                                       delta_alpha, delta_D, dnc_chart, dnc_slice, hat_delta, lift_left,
                                       multiply_dnc)
from opcalc.groupoid.seminorms import (SchwartzWord, all_words, clause_values, compare_tables,
                                       schwartz_seminorm, seminorm_table, vanishing_proxy,
                                       zero_slice_moments)
from opcalc.groupoid.sobolev import dirac_lemma_check, mode_sum_closed, mode_sum_direct, sobolev_ratio
from opcalc.groupoid.study import algebra_laws, frame_trace_error, hat_leibniz
from opcalc.groupoid.theorem_a import default_functions, normalize, oracle_calc, theoremA_check

SPEC = GridSpec(N=32, V=8.0, Nv=128)


@pytest.fixture(scope="module")
def grids():
    return SPEC.build()


@pytest.fixture(scope="module")
def kernels(grids):
    names = ("gauss-a1", "gauss-1+d1d2/2", "gauss-d1")
    return [by_name(n).kernel(*grids) for n in names]


# ------------------------------------------------------------------ grids

def test_circle_grid_power_of_two():
    with pytest.raises(AlgebraError):
        CircleGrid(24)


def test_spectral_derivative_exact_on_modes():
    g = CircleGrid(32)
    assert np.abs(g.derivative(np.sin(3 * g.theta)) - 3 * np.cos(3 * g.theta)).max() <= 1e-12


def test_derivative_matrix_is_antisymmetric():
    D = CircleGrid(16).D
    assert np.abs(D + D.T).max() <= 1e-13


def test_vgrid_transform_roundtrip():
    vg = VGrid(8.0, 128)
    F = np.exp(-vg.v[:, None] ** 2) * np.ones((1, 4))
    assert np.abs(vg.inverse(vg.transform(F)) - F).max() <= 1e-13
    # transform at xi = 0 is the integral, sqrt(pi)
    assert vg.transform(F)[0, 0].real == pytest.approx(np.sqrt(np.pi), rel=1e-12)


def test_t_grid_geometric_and_resolved():
    ts = t_grid(64, 4.0, 0.5)
    assert np.allclose(ts[1:] / ts[:-1], 0.5)
    assert ts[-1] * 64 / (2 * np.pi) >= 4.0
    with pytest.raises(AlgebraError):
        t_grid(64, ratio=1.5)


def test_log_derivatives_on_power():
    assert log_derivative_at(lambda t: t ** 3, 0.7) == pytest.approx(3 * 0.7 ** 3, rel=1e-9)
    # t d/dt t^2 = 2 t^2; the central grid stencil gives t^2 sinh(2h)/h with h = log step
    ts = 4.0 * 0.5 ** np.arange(6)
    h = np.log(2.0)
    assert np.allclose(log_derivative(ts ** 2, ts)[1:-1], ts[1:-1] ** 2 * np.sinh(2 * h) / h, rtol=1e-12)


# ---------------------------------------------------------------- algebra

def test_algebra_laws_on_corpus(kernels):
    laws = algebra_laws(kernels)
    assert laws["double_adjoint"] == 0.0
    for k, v in laws.items():
        assert v <= 1e-9, k


def test_discrete_unit(kernels, grids):
    _, ts, _ = grids
    g = kernels[1]
    u = discrete_unit(g, ts[1])
    ug = convolve(u, g)
    assert np.abs(ug.slices[1] - g.slices[1]).max() <= 1e-14
    assert np.abs(ug.slices[0]).max() == 0.0
    assert pi_t_norm(u, ts[1]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(AlgebraError):
        discrete_unit(g, 0.3)


def test_zero_slice_commutes(kernels):
    f, g, _ = kernels
    assert np.abs(convolve(f, g).zero - convolve(g, f).zero).max() <= 1e-14


def test_adjoint_of_zero_slice(kernels):
    f = kernels[2]
    assert np.array_equal(adjoint(f).zero, np.conj(f.zero[::-1]))


def test_incompatible_grids(kernels):
    other = by_name("gauss-a1").kernel(*GridSpec(N=16, V=8.0, Nv=128).build())
    with pytest.raises(AlgebraError):
        convolve(kernels[0], other)


def test_gaussian_norms(kernels):
    f = kernels[0]
    # zero slice e^{-v^2}: the line convolution norm is its integral
    assert pi_x_norms(f).max() == pytest.approx(np.sqrt(np.pi), rel=1e-12)
    per_t, per_x = l1_bounds(f)
    assert cstar_norm(f) <= max(per_t.max(), per_x.max()) * (1 + 1e-12)


def test_chart_residual_shrinks_with_t():
    e = by_name("gauss-a1")
    res = [e.kernel(*GridSpec(N=N, V=8.0, Nv=128).build()).chart_residual() for N in (32, 128)]
    assert res[1] < res[0]


# ------------------------------------------------------------------- dnc

def test_dnc_at_zero_is_derivative_times_v(grids):
    grid, _, vg = grids
    v, x = vg.v[:, None], grid.theta[None, :]
    assert np.abs(dnc_chart(COS, grid, vg, 0.0) + np.sin(x) * v).max() <= 1e-14


def test_dnc_of_constant_vanishes(grids):
    grid, _, vg = grids
    c = constant(2.5)
    assert np.abs(dnc_slice(c, grid, 0.5)).max() == 0.0
    assert np.abs(dnc_chart(c, grid, vg, 0.0)).max() == 0.0


def test_dnc_chart_is_order_t(grids):
    grid, _, vg = grids
    e = [np.abs(dnc_chart(COS, grid, vg, t) - dnc_chart(COS, grid, vg, 0.0)).max() for t in (1e-2, 1e-3)]
    assert e[0] / e[1] == pytest.approx(10, rel=0.05)


def test_spectral_derivative_of_circle_function():
    th = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(SIN.d(th), np.cos(th))
    h = CircleFunction(lambda x: np.cos(2 * x))
    assert np.abs(h.d(th) + 2 * np.sin(2 * th)).max() <= 1e-12


# ----------------------------------------------------------- lifted operators

def test_lift_of_one_is_identity(kernels):
    f = kernels[1]
    out = lift_left(CircleOperator.function(constant(1.0)), f)
    assert np.abs(out.slices - f.slices).max() <= 1e-15
    assert np.abs(out.zero - f.zero).max() <= 1e-15


def test_dtheta_matrix_on_fourier_mode():
    grid = CircleGrid(32)
    e = np.exp(3j * grid.theta)
    assert np.abs(DTHETA.matrix(grid) @ e - 3j * e).max() <= 1e-12


def test_operator_order_cap():
    with pytest.raises(AlgebraError):
        CircleOperator([None] * 5 + [constant(1.0)])


def test_delta_of_function_is_dnc_multiplier(kernels):
    f = kernels[1]
    a = delta_D(CircleOperator.function(COS), f)
    b = multiply_dnc(COS, f)
    assert np.abs(a.slices - b.slices).max() <= 1e-14
    assert np.abs(a.zero - b.zero).max() <= 1e-14


def test_delta_needs_order_at_most_one(kernels):
    with pytest.raises(AlgebraError):
        delta_D(CircleOperator([None, None, constant(1.0)]), kernels[0])


def test_delta_alpha_closed_form(kernels, grids):
    # zero slice e^{-v^2}: -F - v F' = (2 v^2 - 1) e^{-v^2}
    _, _, vg = grids
    v = vg.v[:, None]
    out = delta_alpha(kernels[0])
    assert np.abs(out.zero - (2 * v ** 2 - 1) * np.exp(-v ** 2)).max() <= 1e-8


def test_delta_alpha_grid_mode_on_power_of_t(grids):
    # f_t = t^2 G with G fixed: -f + t f' = f, up to the O(h^2) log-t stencil
    grid, _, vg = grids
    base = by_name("gauss-a1").kernel(grid, 2.0 * 0.9 ** np.arange(5), vg)
    k = base.bare()
    k = k.like(k.ts[:, None, None] ** 2 * k.slices[:1], k.zero)
    out = delta_alpha(k, mode="grid")
    assert np.abs(out.slices[1:-1] - k.slices[1:-1]).max() <= 0.02 * np.abs(k.slices).max()


def test_hat_delta_of_zero_is_zero(kernels):
    assert hat_delta(scale(0.0, kernels[0])).sup() == 0.0


def test_hat_leibniz_on_slices(kernels):
    rep = hat_leibniz(kernels[0], kernels[1])
    assert rep.slice_residual <= 1e-8
    assert rep.full_residual <= 1e-2


def test_frame_trace():
    assert frame_trace_error() <= 1e-12


# -------------------------------------------------------------- seminorms

def test_word_validation():
    with pytest.raises(AlgebraError):
        SchwartzWord(("t",) * 5)
    with pytest.raises(AlgebraError):
        SchwartzWord(("nope",))
    assert len(all_words(2, ["t", "D"])) == 1 + 2 + 4


def test_seminorm_table_matches_words(kernels):
    f = kernels[0]
    tab = seminorm_table(f, 2, ["t", "dcos"])
    assert tab["t.dcos"] == pytest.approx(schwartz_seminorm(f, ("t", "dcos")), rel=1e-14)
    assert tab["id"] == pytest.approx(1.0, abs=1e-14)


def test_zero_kernel_seminorms(kernels):
    z = scale(0.0, kernels[0])
    assert max(seminorm_table(z, 1).values()) == 0.0


def test_compare_tables():
    assert compare_tables({"a": 1.0, "b": 1e-12}, {"a": 1.05, "b": 1e-9}).finite
    r = compare_tables({"a": 1.0}, {"a": 2.0})
    assert not r.finite and r.worst_word == "a"
    assert not compare_tables({"a": 1.0}, {"a": np.inf}).finite


def test_zero_slice_moments_and_decay(kernels):
    f = kernels[0]
    m = zero_slice_moments(f)
    assert np.all(np.isfinite(m)) and m[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert vanishing_proxy(f) <= 1e-12


def test_constant_kernel_fails_first_clause(grids):
    one = negative_controls()[0].kernel(*grids)
    # t^k f grows like t_max^k
    c1 = clause_values(one, ("clause1",))["clause1"]
    assert c1["k2l0" + "1"] == pytest.approx(16.0, rel=1e-12)
    assert c1["k0l0" + "1"] == pytest.approx(1.0, rel=1e-12)


def test_negative_controls_are_flagged():
    assert all(e.expected_fail for e in negative_controls())
    assert not any(e.expected_fail for e in schwartz_corpus())
    assert len(schwartz_corpus()) == 20


# ---------------------------------------------------------------- Sobolev

def test_sobolev_zero_kernel(kernels):
    r = sobolev_ratio(scale(0.0, kernels[0]))
    assert r.lhs == 0.0 and r.ratio == 0.0


def test_sobolev_ratio_bounded(kernels):
    for f in kernels:
        r = sobolev_ratio(f)
        assert 0 < r.ratio < 1


def test_dirac_lemma_closed_form():
    C2, rows = dirac_lemma_check()
    for t, direct, closed, _ in rows:
        assert direct == pytest.approx(closed, rel=1e-10)
    assert C2 <= 1.0


@settings(max_examples=30)
@given(st.floats(1e-3, 10.0))
def test_mode_sum_bounded_by_inverse_t(t):
    assert mode_sum_closed(t) <= max(1.0 / t, 1.0)


def test_mode_sum_at_large_t():
    # only m = 0 survives: 1/(2 pi)
    assert mode_sum_direct(1e4, terms=10) == pytest.approx(1 / (2 * np.pi), rel=1e-6)


# ------------------------------------------------------------- calculus

def test_theorem_a_cross_residual(kernels):
    a = normalize(kernels[0])
    rep, = theoremA_check(a, default_functions()[:1], n=24)
    assert rep.cross_residual <= 1e-3


def test_oracle_of_zero_function(kernels):
    a = normalize(kernels[0])
    out = oracle_calc(a, lambda x: 0.0 * x)
    assert out.sup() == 0.0


def test_oracle_identity_function_returns_kernel(kernels):
    a = normalize(kernels[0])
    out = oracle_calc(a, lambda x: x)
    assert np.abs(out.slices - a.slices).max() <= 1e-12
    assert np.abs(out.zero - a.zero).max() <= 1e-12


def test_calculus_needs_f0_zero(kernels):
    a = normalize(kernels[0])
    with pytest.raises(AlgebraError):
        oracle_calc(a, lambda x: 1.0 + x)
    with pytest.raises(AlgebraError):
        theoremA_check(a, [SampledFunction(lambda x: bump(x), 2.5, name="bump")])


def test_oracle_rejects_non_self_adjoint(kernels):
    with pytest.raises(AlgebraError):
        oracle_calc(kernels[2], lambda x: x)


# ------------------------------------------------------------------ store

def test_file_stem():
    assert file_stem("gauss-1+d1d2/2") == "gauss-1+d1d2_2"
    assert file_stem("gauss-cos(y-x)") == "gauss-cos(y-x)"


def test_save_load_roundtrip(tmp_path, kernels):
    f = kernels[1]
    path = save_kernel(f, tmp_path, f.meta["name"])
    g = load_kernel(path)
    assert np.array_equal(g.slices, f.slices) and np.array_equal(g.zero, f.zero)
    assert np.array_equal(g.ts, f.ts) and g.meta["name"] == "gauss-1+d1d2/2"
    assert not g.lazy
