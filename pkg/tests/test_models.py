import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from hyperribbon.bounds import TaylorBudget
from hyperribbon.errors import DomainError, ModelEvaluationError
from hyperribbon.models import (
    Activation2D,
    ExpSumModel,
    ReactionModel,
    SIRModel,
    constraint_check,
    constraint_check_2d,
    constraint_lhs,
    constraint_lhs_2d,
    model_jet,
    model_jet_2d,
    model_value,
    model_value_2d,
    sir_integrate,
    theory_to_native,
)

B11 = TaylorBudget(1.0, 2.0, 11)


def _sir_rhs(beta, gamma, n):
    def f(_, y):
        s, i, r = y
        return [-beta * s * i / n, beta * s * i / n - gamma * i, gamma * i]
    return f


def test_simple_values():
    assert model_value(ExpSumModel((1.0,), (0.0,)), 0.7) == 1.0
    assert model_value(ReactionModel((1.0, 0.0, 0.0, 1.0)), 1.0) == 0.5
    m = SIRModel(0.0, 1.0, 10.0, 1.0)
    assert model_value(m, 1.0) == pytest.approx(math.exp(-1), rel=1e-13)
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(model_value(SIRModel(0.0, 0.7, 10.0, 2.0), t), 2 * np.exp(-0.7 * t), rtol=1e-13)


def test_sir_without_recovery_keeps_R():
    out = sir_integrate(SIRModel(2.0, 0.0, 10.0, 1.0, r0=0.5), [0.2, 0.6, 1.0])
    assert all(r == pytest.approx(0.5, abs=1e-14) for _, _, r in out)


def test_sir_matches_rk4_reference():
    beta, gamma, n, i0 = 3.0, 0.8, 10.0, 0.5
    f = _sir_rhs(beta, gamma, n)
    y = np.array([n - i0, i0, 0.0])
    h = 1e-5
    for _ in range(100000):
        k1 = np.array(f(0, y)); k2 = np.array(f(0, y + h / 2 * k1))
        k3 = np.array(f(0, y + h / 2 * k2)); k4 = np.array(f(0, y + h * k3))
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert model_value(SIRModel(beta, gamma, n, i0), 1.0) == pytest.approx(y[1], rel=1e-9)


def test_sir_matches_adaptive_integrator(rng):
    for _ in range(5):
        beta, gamma = rng.uniform(0, 5), rng.uniform(0, 2)
        i0 = rng.uniform(0.01, 3)
        t = np.linspace(0, 1, 11)
        ref = solve_ivp(_sir_rhs(beta, gamma, 10.0), (0, 1), [10 - i0, i0, 0], t_eval=t,
                        rtol=1e-13, atol=1e-14, method="DOP853")
        got = np.array(sir_integrate(SIRModel(beta, gamma, 10.0, i0), t))
        np.testing.assert_allclose(got.T, ref.y, rtol=1e-10, atol=1e-12)


def test_expsum_jets_are_exponential_series():
    jet = model_jet(ExpSumModel((1.0,), (1.0,)), 0.0, 12)
    expected = [(-1) ** k / math.factorial(k) for k in range(13)]
    np.testing.assert_allclose(jet.coeffs, expected, rtol=1e-15)


def test_expsum_jets_match_symbolic(rng):
    x = sp.symbols("x")
    for _ in range(5):
        A, lam = rng.uniform(0, 2, 3), rng.uniform(0, 3, 3)
        x0 = float(rng.uniform(0, 1))
        expr = sum(sp.Float(a, 30) * sp.exp(-sp.Float(l, 30) * x) for a, l in zip(A, lam))
        ref = [float(sp.diff(expr, x, k).subs(x, sp.Float(x0, 30)) / sp.factorial(k)) for k in range(11)]
        got = model_jet(ExpSumModel(tuple(A), tuple(lam)), x0, 10).coeffs
        np.testing.assert_allclose(got, ref, rtol=1e-13, atol=1e-300)


def _reaction_series(theta, x0, K):
    t1, t2, t3, t4 = [sp.Rational(repr(v)) for v in theta]
    u = sp.symbols("u")
    expr = (t1 * (u + x0) ** 2 + t2 * (u + x0)) / ((u + x0) ** 2 + t3 * (u + x0) + t4)
    ser = sp.series(expr, u, 0, K + 1).removeO()
    return [float(ser.coeff(u, k)) if k else float(ser.subs(u, 0)) for k in range(K + 1)]


def test_reaction_jet_symbolic_simple():
    jet = model_jet(ReactionModel((1.0, 0.0, 0.0, 1.0)), 0.0, 8).coeffs
    np.testing.assert_allclose(jet, [0, 0, 1, 0, -1, 0, 1, 0, -1], atol=1e-15)


def test_reaction_jets_random_against_symbolic(rng):
    for _ in range(20):
        theta = tuple(float(v) for v in rng.uniform([0, 0, 0, 0.5], [2, 2, 2, 2]))
        x0 = sp.Rational(int(rng.integers(0, 10)), 10)
        K = int(rng.integers(1, 13))
        ref = _reaction_series(theta, x0, K)
        got = model_jet(ReactionModel(theta), float(x0), K).coeffs
        np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-14)


def test_reaction_rejects_vanishing_denominator():
    with pytest.raises(ModelEvaluationError):
        model_value(ReactionModel((1.0, 0.0, -1.0, 0.0)), 1.0)


def _richardson_derivative(f, x0, k, h):
    # central differences at steps h and h/2, one Richardson step
    def cd(step):
        pts = np.arange(-5, 6)
        c = np.polynomial.polynomial.polyfit(pts * step, f(x0 + pts * step), pts.size - 1)
        return c[k]
    return (4 * cd(h / 2) - cd(h)) / 3


def test_sir_jets_against_finite_differences(rng):
    for _ in range(5):
        m = SIRModel(rng.uniform(0.5, 4), rng.uniform(0.1, 2), 10.0, rng.uniform(0.2, 2))
        x0 = 0.5
        jet = model_jet(m, x0, 4).coeffs
        f = lambda x: model_value(m, x)
        for k in range(1, 5):
            fd = _richardson_derivative(f, x0, k, 0.02)
            assert fd == pytest.approx(jet[k], rel=1e-6, abs=1e-9)


def test_jet_errors():
    with pytest.raises(DomainError):
        model_jet(ExpSumModel((1.0,), (1.0,)), 0.0, -1)
    with pytest.raises(DomainError):
        model_jet(SIRModel(1.0, 1.0, 10.0, 1.0, t_init=0.5), 0.2, 3)
    with pytest.raises(DomainError):
        SIRModel(1.0, 1.0, 10.0, 11.0)


def test_constant_model_budget():
    accept = ExpSumModel((3.31,), (0.0,))
    reject = ExpSumModel((3.32,), (0.0,))
    assert constraint_check(accept, B11).passed
    assert not constraint_check(reject, B11).passed
    assert math.sqrt(11) == pytest.approx(3.3166, abs=1e-4)


def test_large_amplitude_rejected():
    rep = constraint_check(ExpSumModel((100.0,), (1.0,)), B11)
    assert not rep.passed
    assert rep.max_ratio > 100


def test_constraint_lhs_weights():
    jets = np.array([1.0, 1.0, 1.0])
    assert constraint_lhs(jets, 2.0, 0.5) == pytest.approx(3.0)
    assert constraint_lhs(jets, 2.0, 1.0, order=1) == pytest.approx(5.0)


def test_theory_to_native():
    np.testing.assert_allclose(theory_to_native([-1, 0, 1]), [0, 0.5, 1])
    np.testing.assert_allclose(theory_to_native([-1, 1], (2, 6)), [2, 6])


def test_activation_reductions():
    base = ExpSumModel((0.6, 0.4), (1.0, 3.0))
    ext0 = Activation2D(base, (0.0, 0.0))
    for s in (0.0, 0.3, 1.0):
        assert model_value_2d(ext0, 0.4, s) == pytest.approx(model_value(base, 0.4), rel=1e-14)
    ext = Activation2D(base, (0.7, 1.3))
    assert model_value_2d(ext, 0.4, 0.0) == pytest.approx(model_value(base, 0.4), rel=1e-14)


def test_activation_nested_value_high_precision():
    ext = Activation2D(ExpSumModel((1.0,), (1.0,)), (1.0,))
    with mpmath.workdps(30):
        ref = mpmath.exp(-mpmath.exp(-1))
    assert model_value_2d(ext, 1.0, 1.0) == pytest.approx(float(ref), rel=1e-14)
    assert float(ref) == pytest.approx(0.69220, abs=5e-6)


def test_activation_energy_count():
    with pytest.raises(DomainError):
        Activation2D(ReactionModel((1, 1, 1, 1)), (0.1,))
    with pytest.raises(DomainError):
        Activation2D(SIRModel(1, 1, 10, 1), (0.1, 0.2, 0.3))


def test_2d_constant_model_budget():
    n = 21
    b = TaylorBudget(1.0, 2.0, 6)
    ok = Activation2D(ExpSumModel((math.sqrt(n) * 0.999,), (0.0,)), (0.5,))
    bad = Activation2D(ExpSumModel((math.sqrt(n) * 1.001,), (0.0,)), (0.5,))
    assert constraint_check_2d(ok, b).passed
    assert not constraint_check_2d(bad, b).passed


def test_2d_lhs_reduces_to_1d_without_activation():
    base = SIRModel(2.0, 0.5, 10.0, 0.5)
    ext = Activation2D(base, (0.0, 0.0))
    jets2 = model_jet_2d(ext, 0.3, 0.6, 5)
    np.testing.assert_allclose(jets2[:, 1:], 0, atol=1e-14)
    jets1 = np.array(model_jet(base, 0.3, 5).coeffs)
    assert constraint_lhs_2d(jets2, 2.0, 0.5, 0.5, 5) == pytest.approx(constraint_lhs(jets1, 2.0, 0.5), rel=1e-12)


@pytest.mark.parametrize("base,energies", [
    (ExpSumModel((0.5, 0.3), (1.0, 2.5)), (0.4, 0.9)),
    (ReactionModel((1.2, 0.4, 0.8, 0.9)), (0.1, 0.2, 0.3, 0.4)),
    (SIRModel(2.5, 0.7, 10.0, 0.8), (0.6, 0.3)),
])
def test_2d_jets_against_finite_differences(base, energies):
    ext = Activation2D(base, energies)
    t0, s0, h = 0.4, 0.5, 1e-3
    a = model_jet_2d(ext, t0, s0, 3)
    f = lambda t, s: model_value_2d(ext, t, s)
    dt = (f(t0 + h, s0) - f(t0 - h, s0)) / (2 * h)
    ds = (f(t0, s0 + h) - f(t0, s0 - h)) / (2 * h)
    dts = (f(t0 + h, s0 + h) - f(t0 + h, s0 - h) - f(t0 - h, s0 + h) + f(t0 - h, s0 - h)) / (4 * h * h)
    assert a[1, 0] == pytest.approx(dt, rel=1e-5, abs=1e-8)
    assert a[0, 1] == pytest.approx(ds, rel=1e-5, abs=1e-8)
    assert a[1, 1] == pytest.approx(dts, rel=1e-4, abs=1e-7)


expsum_models = st.builds(
    lambda a, l: ExpSumModel(tuple(a[: len(l)]), tuple(l[: len(a)])),
    st.lists(st.floats(0, 2), min_size=1, max_size=4),
    st.lists(st.floats(0, 5), min_size=1, max_size=4),
)
reaction_models = st.builds(
    lambda a, b, c, d: ReactionModel((a, b, c, d)),
    st.floats(0, 2), st.floats(0, 2), st.floats(0, 2), st.floats(0.2, 2),
)
sir_models = st.builds(
    lambda b, g, i: SIRModel(b, g, 10.0, i),
    st.floats(0, 5), st.floats(0, 2), st.floats(0.01, 3),
)


@given(expsum_models | reaction_models | sir_models, st.floats(0.1, 0.9), st.sampled_from([1e-2, -1e-2, 3e-3]))
def test_jet_polynomial_consistency(model, x0, h):
    K = 6
    jet = model_jet(model, x0, K)
    # radius estimate from the jet itself
    c = np.abs(np.array(jet.coeffs[1:]))
    r_est = max(1.0, float(np.max(c ** (1.0 / np.arange(1, K + 1)))))
    scale = max(1.0, abs(jet.coeffs[0]))
    assert abs(jet(x0 + h) - model_value(model, x0 + h)) <= 2 * (abs(h) * 2 * r_est) ** (K + 1) * scale + 1e-14 * scale


@given(sir_models, st.lists(st.floats(0, 1), min_size=1, max_size=10))
def test_sir_conservation(model, times):
    out = sir_integrate(model, sorted(times))
    for s, i, r in out:
        assert abs(s + i + r - model.n_tot) <= 1e-10 * model.n_tot


@given(expsum_models | reaction_models | sir_models, st.floats(1.0, 3.0), st.floats(0.0, 0.9))
def test_constraint_monotone_in_budget(model, c_factor, r_cut):
    b = TaylorBudget(1.0, 2.0, 7)
    rep = constraint_check(model, b, check_grid=41)
    assume(rep.passed)
    looser = TaylorBudget(c_factor, 2.0 - r_cut, 7)
    assert constraint_check(model, looser, check_grid=41).passed
