"""Riemann-sum smooth calculus, normal calculus, resolvents and contour calculus."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opcalc import funcalc as fc
from opcalc.algebra import (AlgebraError, Contour, norm, oracle_holo_calc, oracle_smooth_calc,
                            random_hermitian, random_normal)
from opcalc.funcalc import SampledFunction, bump

seeds = st.integers(0, 2 ** 32 - 1)


def x_bump(L=2.5, n=1024):
    return SampledFunction(lambda x: x * bump(x), L, n, name="x*bump")


def x2_bump(L=2.5, n=1024):
    return SampledFunction(lambda x: x ** 2 * bump(x), L, n, name="x^2*bump")


# ----------------------------------------------------------- phi threshold

def test_phi_values():
    assert fc.phi_threshold(0.0) == 1
    assert fc.phi_threshold(1.0) == 4
    assert fc.phi_threshold(3.0) == 26 == math.ceil(9 * math.e) + 1


@pytest.mark.parametrize("xi", [0.0, 1.0, 3.0, 7.5])
def test_phi_implication_sweep(xi):
    # oracle: log-gamma evaluation of xi^m/m! against 1/sqrt(m!)
    for m in range(fc.phi_threshold(xi) + 1, 401):
        lhs = m * math.log(xi) - math.lgamma(m + 1) if xi else -math.inf
        assert lhs <= -0.5 * math.lgamma(m + 1) + 1e-12


def test_phi_errors():
    with pytest.raises(AlgebraError):
        fc.phi_threshold(-1.0)
    with pytest.raises(AlgebraError) as e:
        fc.phi_threshold(101.0)
    assert e.value.kind == "overflow"


# ------------------------------------------------------ sampled functions

def test_sampled_function_invariants():
    f = x_bump()
    assert f.vanishes_at_zero
    assert abs(f.samples[0]) == 0 and abs(f.samples[-1]) == 0
    g = f.quotient_samples()
    assert abs(g[f.grid_count // 2] - 1.0) <= 1e-8      # g(0) = f'(0) = 1


def test_sampled_function_rejects_non_compact():
    with pytest.raises(AlgebraError):
        SampledFunction(lambda x: x, 2.5, 256)


def test_sampled_function_grid_power_of_two():
    with pytest.raises(AlgebraError):
        SampledFunction(lambda x: x * bump(x), 2.5, 1000)


# ------------------------------------------------- truncated exponentials

def test_truncated_exponential_xi_zero():
    x = random_hermitian(4, np.random.default_rng(0))
    assert np.array_equal(fc.truncated_exponential(x, 3, 0.0, method="direct"), x)


@settings(max_examples=30)
@given(seeds, st.floats(-20, 20), st.integers(1, 8))
def test_truncated_exponential_star_symmetry(seed, xi, n):
    x = random_hermitian(4, np.random.default_rng(seed))
    # exact up to rounding; the literal sum carries terms of size e^{|xi| |x|}
    for method, tol in (("direct", 1e-14 * math.exp(abs(xi))), ("stable", 1e-12)):
        p = fc.truncated_exponential(x, n, xi, method=method)
        m = fc.truncated_exponential(x, n, -xi, method=method)
        assert norm(p.conj().T - m) <= tol * max(1.0, norm(p))


def test_truncated_exponential_scalar_pi():
    x = np.eye(1, dtype=complex)
    n = 2
    out = fc.truncated_exponential(x, n, math.pi, method="direct")
    M = fc.truncation_order(n, math.pi)
    bound = sum(1 / math.sqrt(math.factorial(m)) for m in range(M + 1, M + 60))
    assert abs(out[0, 0] + 1) <= bound + 1e-14


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.1, 12), st.integers(1, 6))
def test_truncation_error_bound(seed, xi, n):
    # oracle: x e^{i xi x} from the eigendecomposition
    x = random_hermitian(4, np.random.default_rng(seed), scale=1.0)
    full = oracle_smooth_calc(x, lambda lam: lam * np.exp(1j * xi * lam))
    approx = fc.truncated_exponential(x, n, xi, method="direct")
    M = fc.truncation_order(n, xi)
    C = norm(x)
    bound = sum(math.exp((m + 1) * math.log(C) - 0.5 * math.lgamma(m + 1)) for m in range(M + 1, M + 200))
    assert norm(full - approx) <= bound + 1e-14 * math.exp(xi * C)


def test_stable_matches_direct_for_moderate_xi():
    x = random_hermitian(5, np.random.default_rng(1), scale=0.8)
    for xi in (0.5, 3.0, 6.0):
        d = fc.truncated_exponential(x, 4, xi, method="direct")
        s = fc.truncated_exponential(x, 4, xi, method="stable")
        assert norm(d - s) <= 1e-10


# ------------------------------------------------------------ beta identity

@pytest.mark.parametrize("j,m", [(1, 1), (1, 2), (3, 7)])
def test_beta_examples(j, m):
    from opcalc.pushforward import beta_identity_check
    assert beta_identity_check(j, m) <= 1e-14 * (1 if m < 7 else 1 / math.factorial(5))


def test_beta_all_pairs():
    from opcalc.pushforward import beta_identity_check
    assert max(beta_identity_check(j, m) for m in range(1, 21) for j in range(1, m + 1)) <= 1e-12


# ---------------------------------------------------------- smooth calculus

def test_identity_function_recovers_a():
    a = np.diag([-0.5, 0.0, 0.5]).astype(complex)
    # the error is not monotone step by step (Riemann-sum aliasing), only overall
    errs = [norm(fc.smooth_calc_self_adjoint(a, x_bump(), n) - a) for n in (4, 16, 64)]
    assert errs[-1] <= 1e-3
    assert errs[0] > errs[1] > errs[2]


def test_zero_matrix_maps_to_zero():
    out = fc.smooth_calc_self_adjoint(np.zeros((3, 3), dtype=complex), x2_bump(), 16)
    assert np.array_equal(out, np.zeros((3, 3)))


def test_square_function_matches_oracle():
    a = np.diag([0.0, 0.5, 1.0]).astype(complex)
    out = fc.smooth_calc_self_adjoint(a, x2_bump(), 64)
    assert norm(out - np.diag([0, 0.25, 1])) <= 1e-3


def test_smooth_calc_errors():
    with pytest.raises(AlgebraError) as e:
        fc.smooth_calc_self_adjoint(np.diag([3.0, 0.0]).astype(complex), x_bump(), 8)
    assert e.value.kind == "support"
    with pytest.raises(AlgebraError) as e:
        fc.smooth_calc_self_adjoint(np.array([[0, 1], [0, 0]], dtype=complex), x_bump(), 8)
    assert e.value.kind == "non-self-adjoint"


@settings(max_examples=10, deadline=None)
@given(seeds, st.integers(2, 8))
def test_output_self_adjoint_for_real_f(seed, d):
    a = random_hermitian(d, np.random.default_rng(seed), scale=1.0)
    out = fc.smooth_calc_self_adjoint(a, x2_bump(n=512), 16)
    assert norm(out - out.conj().T) <= 1e-10


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_convergence_ratio_per_doubling(seed):
    a = random_normal(6, np.random.default_rng(seed), real_spectrum=True)
    a = (a + a.conj().T) / 2
    f = SampledFunction(lambda x: np.sin(x) * bump(x), 2.5, 1024)
    exact = oracle_smooth_calc(a, f.fn)
    errs = [norm(s - exact) for s in fc.calc_sequence(a, f, (16, 32))]
    assert errs[1] <= 0.6 * errs[0] or errs[1] <= 1e-9


# ---------------------------------------------------------- normal calculus

def test_normal_calc_self_adjoint_consistency():
    a = np.diag([-0.4, 0.2, 0.7]).astype(complex)
    f2 = SampledFunction(lambda z: z.real ** 2 * bump(np.abs(z)) + 0 * z, 2.5, 256, dim=2)
    f1 = SampledFunction(lambda x: x ** 2 * bump(x), 2.5, 256)
    assert norm(fc.smooth_calc_normal(a, f2, 32) - fc.smooth_calc_self_adjoint(a, f1, 32)) <= 1e-6


def test_normal_calc_imaginary_axis():
    a = 1j * np.diag([0.3, 0.6])
    f = SampledFunction(lambda z: np.abs(z) ** 2 * bump(np.abs(z)), 2.5, 256, dim=2)
    assert norm(fc.smooth_calc_normal(a, f, 48) - oracle_smooth_calc(a, f.fn)) <= 5e-3


def test_normal_calc_complex_eigenvalue():
    a = np.diag([0.3 + 0.4j, 0.0])
    f = SampledFunction(lambda z: z * bump(np.abs(z)), 2.5, 256, dim=2)
    assert norm(fc.smooth_calc_normal(a, f, 48) - oracle_smooth_calc(a, f.fn)) <= 5e-3


def test_normal_calc_rejects_non_normal():
    f = SampledFunction(lambda z: z * bump(np.abs(z)), 2.5, 64, dim=2)
    with pytest.raises(AlgebraError):
        fc.smooth_calc_normal(np.array([[0.1, 0.5], [0, 0.2]], dtype=complex), f, 8)


# ------------------------------------------------------------- resolvents

def test_resolvent_zero():
    assert np.array_equal(fc.resolvent_element(np.zeros((2, 2), dtype=complex), 1.0), np.zeros((2, 2)))


def test_resolvent_scalar():
    out = fc.resolvent_element(np.eye(1, dtype=complex), 3.0)
    assert abs(out[0, 0] - 0.5) <= 2e-3


def test_resolvent_hermitian_vs_solve():
    a = random_hermitian(6, np.random.default_rng(2), scale=1.0)
    w = 2j * norm(a)
    direct = a @ np.linalg.inv(w * np.eye(6) - a)
    assert norm(fc.resolvent_element(a, w) - direct) <= 5e-3


def test_resolvent_margin_error():
    with pytest.raises(AlgebraError) as e:
        fc.resolvent_element(np.diag([1.0, 2.0]).astype(complex), 1.01)
    assert e.value.kind == "margin"


# ------------------------------------------------------------- holomorphic

def test_holo_diagonal_square():
    a = np.diag([1.0, 2.0]).astype(complex)
    c = Contour.circle(1.5, 3.0, 128)
    out = fc.holo_calc(a, lambda z: z ** 2, c)
    assert norm(out - oracle_holo_calc(a, lambda z: z ** 2, c)) <= 1e-2


def test_holo_identity_function():
    a = np.diag([1.0, 2.0]).astype(complex)
    assert norm(fc.holo_calc(a, lambda z: z, Contour.circle(1.5, 3.0, 128)) - a) <= 1e-2


def test_holo_jordan_block():
    a = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
    out = fc.holo_calc(a, lambda z: z ** 2, Contour.enclosing(a, 128))
    assert norm(out - np.array([[1, 2], [0, 1]])) <= 1e-2


def test_holo_list_input_shares_resolvents():
    a = np.diag([1.0, 2.0]).astype(complex)
    c = Contour.circle(1.5, 3.0, 64)
    one, two = fc.holo_calc(a, [lambda z: z, lambda z: z ** 2], c)
    assert np.array_equal(one, fc.holo_calc(a, lambda z: z, c))


def test_holo_rejects_unenclosed_spectrum():
    with pytest.raises(AlgebraError):
        fc.holo_calc(np.diag([1.0, 5.0]).astype(complex), lambda z: z, Contour.circle(1.0, 1.0, 64))


# ------------------------------------------------------------ parametrised

def test_parametrized_constant_family():
    a = np.diag([0.2, -0.3]).astype(complex)
    outs, _ = fc.parametrized_calc([(0.5, a), (0.7, a)], lambda w, lam: lam ** 2 * bump(lam), 16)
    assert np.array_equal(outs[0], outs[1])


def test_parametrized_scaled_family():
    a0 = random_hermitian(4, np.random.default_rng(3), scale=1.0)
    ws = np.linspace(0.5, 1.0, 4)
    fam = [(w, w * a0) for w in ws]
    outs, _ = fc.parametrized_calc(fam, lambda w, lam: lam ** 2 * bump(lam, 1.2 * 2.5 / 2.5), 48,
                                   support=2.5)
    for (w, x), o in zip(fam, outs):
        assert norm(o - x @ x) <= 5e-3


def test_parametrized_indicator_decreases():
    a0 = random_hermitian(4, np.random.default_rng(4), scale=1.0)
    fam = [(w, w * a0) for w in (0.5, 0.75, 1.0)]
    _, ind = fc.parametrized_calc(fam, lambda w, lam: np.sin(lam) * bump(lam), ns=[8, 16, 32, 64],
                                  support=2.5)
    assert all(b < a for a, b in zip(ind, ind[1:]))
