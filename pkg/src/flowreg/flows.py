"""Time discretisations of the damped second-order gradient flow.

The continuous model is::

    x'' + eta(t) x' + A^T A x = A^T b,    x(t0) = x0,  x'(t0) = q0,

written as the first-order system ``x' = q``, ``q' = -eta(t) q + A^T (b - A x)``.
Four schemes are provided: symplectic Euler (``se``), Stoermer-Verlet
(``sv``), a Nesterov-flavoured modified Stoermer-Verlet recurrence (``msv``)
and classical fourth-order Runge-Kutta (``rk4``). All of them use the time
grid ``t_k = t0 + k dt``.
"""
import math
import re
from dataclasses import dataclass

import numpy as np

from .stopping import StopRule, drive

__all__ = [
    'DampingSchedule', 'SecondOrderState', 'SchemeCoefficients', 'SCHEMES',
    'eta_at', 'se_step', 'sv_step', 'msv_step', 'rk4_step', 'scheme_coefficients',
    'energy', 'objective', 'flow_iterates', 'flow_states', 'run_flow',
]

SCHEMES = ('se', 'sv', 'msv', 'rk4')


@dataclass(frozen=True)
class DampingSchedule:
    """Damping coefficient ``eta(t)``.

    ``kind`` is ``'const'`` (``eta(t) = value``), ``'dyn'``
    (``eta(t) = (1 + 2 value) / t``) or ``'invsqrt'`` (``eta(t) = 1/sqrt(t)``).
    Constant damping starts the flow at ``t0 = 0``, the time-dependent kinds at
    ``t0 = 1``.
    """
    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind == 'const':
            if not self.value >= 0:
                raise ValueError('constant damping must be nonnegative')
        elif self.kind == 'dyn':
            if not self.value > -0.5:
                raise ValueError('dynamic damping needs s > -1/2')
        elif self.kind != 'invsqrt':
            raise ValueError('unknown damping kind {!r}'.format(self.kind))

    @classmethod
    def constant(cls, eta):
        return cls('const', float(eta))

    @classmethod
    def dynamic(cls, s):
        return cls('dyn', float(s))

    @classmethod
    def inverse_sqrt(cls):
        return cls('invsqrt')

    @classmethod
    def parse(cls, text):
        """Parse ``const:<eta>``, ``dyn:<s>`` or ``invsqrt``."""
        m = re.fullmatch(r'\s*(const|dyn|invsqrt)\s*(?::\s*([^\s]+))?\s*', text)
        if not m or (m.group(1) == 'invsqrt') != (m.group(2) is None):
            raise ValueError('bad damping spec {!r}'.format(text))
        if m.group(1) == 'invsqrt':
            return cls.inverse_sqrt()
        return cls(m.group(1), float(m.group(2)))

    def __str__(self):
        if self.kind == 'invsqrt':
            return 'invsqrt'
        return '{}:{}'.format(self.kind, repr(self.value))

    @property
    def t0(self):
        return 0.0 if self.kind == 'const' else 1.0

    @property
    def time_dependent(self):
        return self.kind != 'const'

    def __call__(self, t):
        return eta_at(self, t)


def eta_at(sched, t):
    if sched.kind == 'const':
        return sched.value
    if t <= 0:
        raise ValueError('time-dependent damping is singular at t = {}'.format(t))
    if sched.kind == 'dyn':
        return (1.0 + 2.0 * sched.value) / t
    return 1.0 / math.sqrt(t)


@dataclass(frozen=True)
class SecondOrderState:
    x: np.ndarray
    q: np.ndarray
    k: int
    t: float

    @classmethod
    def initial(cls, x0, q0, sched):
        x0 = np.array(x0, dtype=float)
        q0 = np.zeros_like(x0) if q0 is None else np.array(q0, dtype=float)
        if x0.shape != q0.shape:
            raise ValueError('x0 and q0 must have the same shape')
        return cls(x0, q0, 0, sched.t0)


@dataclass(frozen=True)
class SchemeCoefficients:
    """Coefficients of the three-term form ``x+ = x + a (x - x-) + omega A^T (b - A v)``."""
    a: float
    omega: float


def scheme_coefficients(scheme, sched, dt, t):
    eta = eta_at(sched, t)
    if scheme == 'se':
        return SchemeCoefficients(1.0 - dt * eta, dt * dt)
    if scheme in ('sv', 'msv'):
        d = 1.0 + 0.5 * dt * eta
        return SchemeCoefficients((1.0 - 0.5 * dt * eta) / d, dt * dt / d)
    raise ValueError('no three-term form for scheme {!r}'.format(scheme))


def _check_dt(dt):
    if not dt > 0:
        raise ValueError('step size must be positive')


def _force(A, b, x):
    return A.T @ (b - A @ x)


def se_step(state, A, b, sched, dt):
    """One symplectic Euler step: velocity first, then position with the new velocity."""
    _check_dt(dt)
    x, q = state.x, state.q
    q_new = q + dt * (_force(A, b, x) - eta_at(sched, state.t) * q)
    x_new = x + dt * q_new
    return SecondOrderState(x_new, q_new, state.k + 1, state.t + dt)


def sv_step(state, A, b, sched, dt):
    """One Stoermer-Verlet step.

    The first half-step is implicit in the damping term and is solved in
    closed form; the second half-step damps the half-step velocity with
    ``eta(t_{k+1})``.
    """
    _check_dt(dt)
    x, q, t = state.x, state.q, state.t
    denom = 1.0 + 0.5 * dt * eta_at(sched, t)
    if not denom > 0:
        raise ValueError('Stoermer-Verlet half step is singular (1 + dt eta / 2 <= 0)')
    q_half = (q + 0.5 * dt * _force(A, b, x)) / denom
    x_new = x + dt * q_half
    t_new = t + dt
    q_new = q_half - 0.5 * dt * eta_at(sched, t_new) * q_half + 0.5 * dt * _force(A, b, x_new)
    return SecondOrderState(x_new, q_new, state.k + 1, t_new)


def msv_step(prev_x, cur_x, A, b, sched, dt, k):
    """Modified Stoermer-Verlet recurrence, returning ``x_{k+1}``.

    ``v = x_k + a_k (x_k - x_{k-1})`` and
    ``x_{k+1} = v + omega_k A^T (b - A v)`` with the Stoermer-Verlet
    coefficients evaluated at ``t_k = t0 + k dt``.
    """
    _check_dt(dt)
    if k < 1:
        raise ValueError('the recurrence starts at k = 1')
    coef = scheme_coefficients('msv', sched, dt, sched.t0 + k * dt)
    v = cur_x + coef.a * (cur_x - prev_x)
    return v + coef.omega * _force(A, b, v)


def rk4_step(state, A, b, sched, dt):
    """Classical Runge-Kutta step on the augmented state ``(x, q)``."""
    _check_dt(dt)
    x, q, t = state.x, state.q, state.t
    atb = A.T @ b

    def rhs(tt, xx, qq):
        return qq, atb - A.T @ (A @ xx) - eta_at(sched, tt) * qq

    t_mid = t + 0.5 * dt
    k1x, k1q = rhs(t, x, q)
    k2x, k2q = rhs(t_mid, x + 0.5 * dt * k1x, q + 0.5 * dt * k1q)
    k3x, k3q = rhs(t_mid, x + 0.5 * dt * k2x, q + 0.5 * dt * k2q)
    k4x, k4q = rhs(t + dt, x + dt * k3x, q + dt * k3q)
    x_new = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    q_new = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    return SecondOrderState(x_new, q_new, state.k + 1, t + dt)


def objective(A, b, x):
    r = A @ x - b
    return 0.5 * float(r @ r)


def energy(state, A, b, J_min=0.0):
    """``J(x) - J_min + |q|^2 / 2`` with ``J(x) = |A x - b|^2 / 2``."""
    return objective(A, b, state.x) - J_min + 0.5 * float(state.q @ state.q)


_STEPPERS = {'se': se_step, 'sv': sv_step, 'rk4': rk4_step}


def flow_states(scheme, A, b, sched, dt, x0, q0=None):
    """Yield successive :class:`SecondOrderState` objects, starting with the initial one.

    For ``msv`` the velocity field is the backward difference
    ``(x_k - x_{k-1}) / dt``; the first step is a symplectic Euler step.
    """
    if scheme not in SCHEMES:
        raise ValueError('unknown scheme {!r}'.format(scheme))
    _check_dt(dt)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    state = SecondOrderState.initial(x0, q0, sched)
    yield state
    if scheme != 'msv':
        step = _STEPPERS[scheme]
        while True:
            state = step(state, A, b, sched, dt)
            yield state
    prev = state
    state = se_step(state, A, b, sched, dt)
    yield state
    while True:
        x_new = msv_step(prev.x, state.x, A, b, sched, dt, state.k)
        prev = state
        state = SecondOrderState(x_new, (x_new - prev.x) / dt, prev.k + 1, sched.t0 + (prev.k + 1) * dt)
        yield state


def flow_iterates(scheme, A, b, sched, dt, x0, q0=None):
    for state in flow_states(scheme, A, b, sched, dt, x0, q0):
        yield state.x


def run_flow(scheme, problem, noisy, sched, dt, rule=None, x0=None, q0=None, label=None):
    """Iterate a flow scheme from ``x0`` (default zero) under the discrepancy rule."""
    if rule is None:
        rule = StopRule(delta=noisy.delta)
    if x0 is None:
        x0 = np.zeros(problem.n)
    params = {'scheme': scheme, 'dt': float(dt), 'damping': str(sched)}
    return drive(flow_iterates(scheme, problem.A, noisy.b_noisy, sched, dt, x0, q0),
                 problem.A, noisy.b_noisy, problem.x_exact, rule,
                 method=label or scheme, params=params)
