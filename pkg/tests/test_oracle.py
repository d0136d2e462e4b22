import math
import warnings

import numpy as np
import pytest

from conftest import random_matrix
from flowreg.flows import DampingSchedule, SecondOrderState, objective, rk4_step
from flowreg.linalg import NumericallySingularWarning
from flowreg.oracle import (OverdampingError, filter_const, filter_dynamic, filter_dynamic_rate,
                            flow_solution_const, flow_solution_dynamic, flow_state_const,
                            flow_state_dynamic, quasi_solution)
from flowreg.problems import hilbert_problem
from flowreg.special import bessel_j


def test_quasi_solution_examples():
    b = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(quasi_solution(np.eye(3), b), b)
    np.testing.assert_allclose(quasi_solution(np.diag([2.0, 0.0]), [4.0, 9.0]), [2.0, 0.0])
    p = hilbert_problem(8)
    xq = quasi_solution(p.A, p.b_exact)
    assert np.linalg.norm(xq - 1) / np.linalg.norm(np.ones(8)) <= 1e-4


def test_quasi_solution_zero_rank():
    with pytest.warns(NumericallySingularWarning):
        np.testing.assert_array_equal(quasi_solution(np.zeros((3, 2)), np.ones(3)), np.zeros(2))


def test_quasi_solution_projects_onto_row_space(rng):
    for _ in range(10):
        A = rng.standard_normal((10, 3)) @ rng.standard_normal((3, 6))
        x = rng.standard_normal(6)
        Q = np.linalg.svd(A.T, full_matrices=False)[0][:, :3]
        np.testing.assert_allclose(quasi_solution(A, A @ x), Q @ (Q.T @ x), atol=1e-10)


def test_filter_const_examples():
    f = filter_const(1.0, 0.0, 0.2)
    assert f.g == 0.0 and f.phi == 0.0
    f = filter_const(1.0, 1.0, 0.1875)
    expected = (1 / 0.1875) * (1 - 1.5 * math.exp(-0.25) + 0.5 * math.exp(-0.75))
    assert f.g == pytest.approx(expected, rel=1e-14)
    lam = 0.1875
    f = filter_const(1.0, 50 / 0.25 + 1, lam)
    assert f.g == pytest.approx(1 / lam, rel=1e-14)   # remainder e^-50 is below rounding


def test_filter_const_zero_eigenvalue_limit():
    eta, t = 2.0, 1.5
    f0 = filter_const(eta, t, 0.0)
    f_small = filter_const(eta, t, 1e-10)
    assert f0.g == pytest.approx(t / eta - (1 - math.exp(-eta * t)) / eta ** 2, rel=1e-12)
    assert f_small.g == pytest.approx(f0.g, rel=1e-8)
    assert f0.phi == pytest.approx((1 - math.exp(-eta * t)) / eta, rel=1e-14)


def test_filter_const_rejects_non_overdamped():
    with pytest.raises(OverdampingError):
        filter_const(1.0, 1.0, 0.25)
    with pytest.raises(OverdampingError):
        filter_const(1.0, 1.0, 0.25 * (1 - 1e-10))


@pytest.mark.parametrize('eta, lam, y0, v0', [(3.0, 1.3, 0.7, -0.4), (1.0, 0.1875, 0.0, 1.0), (5.0, 0.01, 2.0, 0.0)])
def test_filter_solves_scalar_ode(eta, lam, y0, v0):
    c = 1.7

    def y(t):
        f = filter_const(eta, t, lam)
        return (1 - lam * f.g) * y0 + f.phi * v0 + f.g * c

    h = 1e-4
    for t in (0.2, 1.0, 3.0):
        d1 = (y(t + h) - y(t - h)) / (2 * h)
        d2 = (y(t + h) - 2 * y(t) + y(t - h)) / h ** 2
        assert abs(d2 + eta * d1 + lam * y(t) - c) < 1e-6
    assert y(0.0) == y0
    assert (y(h) - y(0)) / h == pytest.approx(v0, abs=1e-3)


def test_filter_rates_match_finite_differences():
    h = 1e-6
    for t in (0.3, 2.0):
        f = filter_const(2.0, t, 0.6)
        fp, fm = filter_const(2.0, t + h, 0.6), filter_const(2.0, t - h, 0.6)
        assert f.g_rate == pytest.approx((fp.g - fm.g) / (2 * h), rel=1e-7)
        assert f.phi_rate == pytest.approx((fp.phi - fm.phi) / (2 * h), rel=1e-7)
        r = filter_dynamic_rate(1.5, t, 0.6)
        assert r == pytest.approx((filter_dynamic(1.5, t + h, 0.6) - filter_dynamic(1.5, t - h, 0.6)) / (2 * h), rel=1e-7)


def test_filter_dynamic_limits():
    s = 1.5
    assert filter_dynamic(s, 2.0, 0.0) == pytest.approx(4 / (4 * (s + 1)))
    assert filter_dynamic(s, 2.0, 1e-12) == pytest.approx(4 / (4 * (s + 1)), rel=1e-10)
    lam = 0.25
    t = 100 / math.sqrt(lam)
    assert abs(lam * filter_dynamic(s, t, lam) - 1) < 5 * 100 ** -(s + 0.5)


def test_filter_dynamic_definition():
    s, t, lam = 2.0, 3.0, 0.7
    z = math.sqrt(lam) * t
    ref = (1 - 2 ** s * math.gamma(s + 1) * bessel_j(s, z) / z ** s) / lam
    assert filter_dynamic(s, t, lam) == pytest.approx(ref, rel=1e-12)


def test_filter_dynamic_ripple_bounded():
    for s in (1.0, 1.5, 2.0):
        for lam in (0.01, 1.0, 6.0):
            for t in np.linspace(0.5, 60, 40):
                z = math.sqrt(lam) * t
                envelope = 2 ** s * math.gamma(s + 1) * min(1.0, math.sqrt(2 / (math.pi * z)) / z ** s * 1.1)
                assert lam * filter_dynamic(s, t, lam) <= 1 + envelope


def test_flow_const_initial_and_limit(rng):
    A = random_matrix(rng, 5, 5)
    b = rng.standard_normal(5)
    eta = 2.5 * np.linalg.norm(A, 2)
    x0 = rng.standard_normal(5)
    np.testing.assert_array_equal(flow_solution_const(A, b, x0, None, eta, 0.0), x0)
    lam_min = np.linalg.svd(A, compute_uv=False)[-1] ** 2
    l2 = 2 * lam_min / (eta + math.sqrt(eta ** 2 - 4 * lam_min))
    np.testing.assert_allclose(flow_solution_const(A, b, x0, None, eta, 60 / l2), quasi_solution(A, b), atol=1e-9)
    with pytest.raises(OverdampingError):
        flow_solution_const(A, b, x0, None, 1.9 * np.linalg.norm(A, 2), 1.0)


def test_flow_const_scalar_against_fine_rk4():
    A, b, eta, dt = np.array([[1.0]]), np.array([1.0]), 3.0, 1e-4
    st = SecondOrderState(np.zeros(1), np.zeros(1), 0, 0.0)
    for _ in range(20000):
        st = rk4_step(st, A, b, DampingSchedule.constant(eta), dt)
    assert st.x[0] == pytest.approx(flow_solution_const(A, b, np.zeros(1), None, eta, 2.0)[0], abs=1e-8)


def test_flow_const_rank_deficient_with_velocity(rng):
    A = rng.standard_normal((4, 3)) @ rng.standard_normal((3, 5))
    b = rng.standard_normal(4)
    eta = 3 * np.linalg.norm(A, 2)
    x0, v0 = rng.standard_normal(5), rng.standard_normal(5)
    st = SecondOrderState(x0, v0, 0, 0.0)
    for _ in range(1000):
        st = rk4_step(st, A, b, DampingSchedule.constant(eta), 1e-3)
    x, v = flow_state_const(A, b, x0, v0, eta, 1.0)
    np.testing.assert_allclose(st.x, x, atol=1e-10)
    np.testing.assert_allclose(st.q, v, atol=1e-10)


def test_flow_const_objective_monotone_scalar():
    for lam, eta in [(1.0, 3.0), (0.2, 1.0), (4.0, 4.5)]:
        A, b = np.array([[math.sqrt(lam)]]), np.array([1.0])
        J = [objective(A, b, flow_solution_const(A, b, np.zeros(1), None, eta, t)) for t in np.linspace(0, 20, 200)]
        assert all(j1 <= j0 + 1e-10 for j0, j1 in zip(J, J[1:]))


def test_flow_dynamic_origin_and_limit(rng):
    A = random_matrix(rng, 6, 6, cond=4.0)
    b = rng.standard_normal(6)
    x0 = rng.standard_normal(6)
    np.testing.assert_allclose(flow_solution_dynamic(A, b, x0, 1.5, 0.0), x0, atol=1e-15)
    sig_min = np.linalg.svd(A, compute_uv=False)[-1]
    x_far = flow_solution_dynamic(A, b, x0, 1.5, 200 / sig_min)
    np.testing.assert_allclose(x_far, quasi_solution(A, b), atol=1e-3 * np.linalg.norm(quasi_solution(A, b)))


@pytest.mark.parametrize('s', [1.5, 0.7])
def test_flow_dynamic_matches_integrators_from_t1(rng, s):
    A = random_matrix(rng, 8, 8)
    b = rng.standard_normal(8)
    x0 = rng.standard_normal(8)
    x1, v1 = flow_state_dynamic(A, b, x0, s, 1.0)
    st = SecondOrderState(x1, v1, 0, 1.0)
    for _ in range(3000):
        st = rk4_step(st, A, b, DampingSchedule.dynamic(s), 1e-3)
    np.testing.assert_allclose(st.x, flow_solution_dynamic(A, b, x0, s, 4.0), atol=1e-9)


def test_flow_dynamic_matches_msv_to_second_order(rng):
    A = random_matrix(rng, 6, 6)
    b = rng.standard_normal(6)
    x1, v1 = flow_state_dynamic(A, b, np.zeros(6), 1.5, 1.0)
    exact = flow_solution_dynamic(A, b, np.zeros(6), 1.5, 3.0)
    from flowreg.flows import flow_states
    errs = []
    for dt in (2e-3, 1e-3):
        for st in flow_states('msv', A, b, DampingSchedule.dynamic(1.5), dt, x1, v1):
            if st.k == round(2.0 / dt):
                errs.append(np.linalg.norm(st.x - exact))
                break
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] > 1.8
