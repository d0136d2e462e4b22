import math

import numpy as np
import pytest

from conftest import random_matrix
from flowreg.flows import (DampingSchedule, SecondOrderState, energy, eta_at, flow_states, msv_step,
                           objective, rk4_step, run_flow, scheme_coefficients, se_step, sv_step)
from flowreg.oracle import flow_solution_dynamic
from flowreg.problems import NoisyInstance, TestProblem
from flowreg.stopping import StopRule

ONE = np.array([[1.0]])


def state(x, q=None, t=0.0):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return SecondOrderState(x, np.zeros_like(x) if q is None else np.atleast_1d(q), 0, t)


def test_eta_examples():
    assert eta_at(DampingSchedule.dynamic(1.5), 1.0) == 4.0
    assert eta_at(DampingSchedule.constant(0.6), 123.0) == 0.6
    assert eta_at(DampingSchedule.inverse_sqrt(), 4.0) == 0.5
    with pytest.raises(ValueError):
        eta_at(DampingSchedule.dynamic(1.5), 0.0)


@pytest.mark.parametrize('text, kind, value, t0', [
    ('const:0.6', 'const', 0.6, 0.0), ('dyn:1.5', 'dyn', 1.5, 1.0), ('invsqrt', 'invsqrt', 0.0, 1.0)])
def test_damping_parse(text, kind, value, t0):
    sched = DampingSchedule.parse(text)
    assert (sched.kind, sched.value, sched.t0) == (kind, value, t0)
    assert DampingSchedule.parse(str(sched)) == sched


@pytest.mark.parametrize('text', ['const', 'dyn:-0.5', 'const:-1', 'invsqrt:2', 'linear:1'])
def test_damping_rejects(text):
    with pytest.raises(ValueError):
        DampingSchedule.parse(text)


def test_se_scalar_example():
    out = se_step(state(1.0), ONE, np.zeros(1), DampingSchedule.constant(0.0), 0.1)
    assert out.q[0] == pytest.approx(-0.1, abs=1e-15)
    assert out.x[0] == pytest.approx(0.99, abs=1e-15)
    assert (out.k, out.t) == (1, 0.1)


def test_sv_scalar_example():
    out = sv_step(state(1.0), ONE, np.zeros(1), DampingSchedule.constant(0.8), 0.8)
    q_half = -0.4 / 1.32
    assert out.x[0] == pytest.approx(1 + 0.8 * q_half, abs=1e-15)
    assert out.x[0] == pytest.approx(0.7575757575757576, abs=1e-15)


def test_msv_coefficients_example():
    c = scheme_coefficients('msv', DampingSchedule.dynamic(1.5), 0.4, 1.4)
    eta = 4 / 1.4
    assert c.a == pytest.approx((1 - 0.2 * eta) / (1 + 0.2 * eta), rel=1e-15)
    assert c.a == pytest.approx(0.2727272727, rel=1e-9)
    assert c.omega == pytest.approx(0.1018181818, rel=1e-9)
    c0 = scheme_coefficients('msv', DampingSchedule.constant(0.0), 0.3, 0.0)
    assert (c0.a, c0.omega) == (1.0, pytest.approx(0.09))


def test_se_coefficients_in_unit_interval():
    for eta, dt in [(0.6, 0.7), (0.1, 1.1), (2.0, 0.3)]:
        c = scheme_coefficients('se', DampingSchedule.constant(eta), dt, 0.0)
        assert 0 < c.a < 1 and c.omega > 0


def test_msv_requires_k_at_least_one():
    with pytest.raises(ValueError):
        msv_step(np.zeros(1), np.zeros(1), ONE, np.zeros(1), DampingSchedule.constant(1), 0.1, 0)


@pytest.mark.parametrize('scheme', ['se', 'sv', 'msv', 'rk4'])
@pytest.mark.parametrize('damping', ['const:0.5', 'dyn:1.5', 'invsqrt'])
def test_exact_solution_is_fixed_point(rng, scheme, damping):
    A = random_matrix(rng, 8, 8)
    x_true = rng.standard_normal(8)
    b = A @ x_true
    states = flow_states(scheme, A, b, DampingSchedule.parse(damping), 0.05, x_true)
    for _, st in zip(range(20), states):
        np.testing.assert_allclose(st.x, x_true, atol=1e-13)
        np.testing.assert_allclose(st.q, 0.0, atol=1e-13)


def test_fixed_point_identity_matrix():
    x0 = np.array([1.0, -2.0])
    out = se_step(state(x0), np.eye(2), x0, DampingSchedule.constant(0.3), 0.5)
    np.testing.assert_array_equal(out.x, x0)
    np.testing.assert_array_equal(out.q, 0.0)


def test_rk4_harmonic_oscillator_local_error():
    errs = []
    for dt in (0.2, 0.1, 0.05):
        out = rk4_step(state(1.0), ONE, np.zeros(1), DampingSchedule.constant(0.0), dt)
        errs.append(abs(out.x[0] - math.cos(dt)))
    assert errs[0] < 2e-5
    for a, b in zip(errs, errs[1:]):
        assert math.log2(a / b) == pytest.approx(6.0, abs=0.3)   # even function: dt^6 leading term


def test_energy_examples(rng):
    A = random_matrix(rng, 5, 5)
    x = rng.standard_normal(5)
    b = A @ x
    assert energy(state(x), A, b) == 0.0
    y = rng.standard_normal(5)
    assert energy(state(y), A, b, J_min=0.25) == pytest.approx(objective(A, b, y) - 0.25)
    assert energy(state(y, np.ones(5)), A, b) == pytest.approx(objective(A, b, y) + 2.5)


def _problem(A, x):
    return TestProblem('custom', A, x, A @ x, {})


def test_run_flow_zero_iterations():
    A = np.eye(3)
    x = np.ones(3)
    noisy = NoisyInstance(A @ x, 0.0, 0.0, 0)
    rep = run_flow('se', _problem(A, x), noisy, DampingSchedule.constant(1.0), 0.1, x0=x)
    assert rep.iterN == 0 and rep.stopped_by == 'discrepancy'


@pytest.mark.parametrize('scheme, dt', [('se', 0.2), ('sv', 0.2), ('msv', 0.2), ('rk4', 0.4)])
def test_noise_free_convergence(rng, scheme, dt):
    A = random_matrix(rng, 10, 10, cond=5.0)
    x = np.ones(10)
    problem = _problem(A, x)
    noisy = NoisyInstance(problem.b_exact, 0.0, 0.0, 0)
    rule = StopRule(tau=1.0, delta=1e-6, n_max=5000)
    rep = run_flow(scheme, problem, noisy, DampingSchedule.constant(1.5), dt, rule=rule)
    assert rep.stopped_by == 'discrepancy'
    assert rep.l2err < 1e-3


def test_divergence_reported():
    A = np.diag([3.0, 1.0])
    problem = _problem(A, np.ones(2))
    noisy = NoisyInstance(problem.b_exact, 0.0, 0.0, 0)
    rep = run_flow('se', problem, noisy, DampingSchedule.constant(0.0), 1.0, rule=StopRule(delta=0.0, n_max=5000))
    assert rep.stopped_by == 'divergence'
    assert np.all(np.isfinite(rep.x))


def test_msv_first_step_is_se(rng):
    A = random_matrix(rng, 6, 6)
    b = rng.standard_normal(6)
    sched = DampingSchedule.dynamic(1.5)
    it = flow_states('msv', A, b, sched, 0.3, np.zeros(6))
    s0, s1 = next(it), next(it)
    np.testing.assert_array_equal(s1.x, se_step(s0, A, b, sched, 0.3).x)
    assert s1.t == 1.3


def test_dynamic_objective_decay_rate(rng):
    # well-posed 20x20 system, s = 1: J(x(t)) ~ t^-3 envelope
    A = random_matrix(rng, 20, 20, cond=3.0)
    b = A @ np.ones(20)
    ts = np.geomspace(10, 100, 200)
    J = np.array([objective(A, b, flow_solution_dynamic(A, b, np.zeros(20), 1.0, t)) for t in ts])
    envelope = np.maximum.accumulate(J[::-1])[::-1]
    slope = np.polyfit(np.log(ts), np.log(envelope), 1)[0]
    assert slope <= -1.5
