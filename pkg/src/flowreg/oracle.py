"""Closed-form solutions of the continuous second-order flow.

In the right singular basis of ``A`` the flow decouples into scalar damped
oscillators ``y'' + eta y' + lam y = sigma c`` with ``lam = sigma^2``, so the
solution is a spectral filter applied to the data:

    x(t) = (I - A^T A g(t, A^T A)) x0 + phi(t, A^T A) x0' + g(t, A^T A) A^T b.

Constant damping is handled in the overdamped regime ``eta > 2 ||A||`` only.
For ``eta(t) = (1 + 2s)/t`` the regular solution with ``x(0) = x0``,
``x'(0) = 0`` has the Bessel-function filter ``g2`` below; its time origin is
``t = 0`` (where the damping is singular), so integrators started at ``t = 1``
must be seeded with ``x(1)`` and ``x'(1)`` from :func:`flow_state_dynamic`.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import DEFAULT_RANK_TOL, NumericallySingularWarning, svd
from .special import bessel_j, bessel_series_ratio, gamma

__all__ = [
    'FilterEvaluation', 'OverdampingError', 'quasi_solution', 'filter_const',
    'filter_dynamic', 'filter_dynamic_rate', 'flow_solution_const',
    'flow_state_const', 'flow_solution_dynamic', 'flow_state_dynamic',
    'bessel_j', 'BOUNDARY_TOL',
]

# relative distance to critical damping below which evaluation is refused
BOUNDARY_TOL = 1e-8


class OverdampingError(ValueError):
    pass


@dataclass(frozen=True)
class FilterEvaluation:
    t: float
    lam: float
    g: float
    phi: float
    g_rate: float = float('nan')
    phi_rate: float = float('nan')


def quasi_solution(A, b, rank_tol=DEFAULT_RANK_TOL, factors=None):
    """Minimum-norm least-squares solution ``sum_i (u_i^T b / sigma_i) v_i``."""
    f = svd(A, rank_tol=rank_tol) if factors is None else factors
    b = np.asarray(b, dtype=float)
    r = f.rank
    if r == 0:
        warnings.warn('matrix has numerical rank 0; returning zero', NumericallySingularWarning, stacklevel=2)
        return np.zeros(f.V.shape[0])
    coef = (f.U[:, :r].T @ b) / f.s[:r]
    return f.V[:, :r] @ coef


def _roots(eta, lam):
    disc = eta * eta - 4.0 * lam
    if disc <= BOUNDARY_TOL * eta * eta:
        raise OverdampingError('eta = {} is not overdamped for lambda = {}'.format(eta, lam))
    root = math.sqrt(disc)
    l1 = 0.5 * (eta + root)
    # l1 * l2 = lam, which avoids cancellation for small lam
    l2 = 2.0 * lam / (eta + root)
    return l1, l2, root


def _decay_integral(rate, t):
    # (1 - exp(-rate t)) / rate, with the rate -> 0 limit t
    if rate == 0.0:
        return t
    return -math.expm1(-rate * t) / rate


def filter_const(eta, t, lam):
    """Filters ``g`` and ``phi`` of the overdamped constant-damping flow.

    ``g(t, lam) = (1/lam) (1 - l1/D e^{-l2 t} + l2/D e^{-l1 t})`` and
    ``phi(t, lam) = (e^{-l2 t} - e^{-l1 t}) / D`` where
    ``D = sqrt(eta^2 - 4 lam)`` and ``l1, l2 = (eta +- D)/2``. These make
    ``y = (1 - lam g) y0 + phi v0 + g c`` solve ``y'' + eta y' + lam y = c`` with
    ``y(0) = y0``, ``y'(0) = v0``. The time derivatives are returned too.
    """
    eta, t, lam = float(eta), float(t), float(lam)
    if lam < 0 or t < 0:
        raise ValueError('need lam >= 0 and t >= 0')
    l1, l2, root = _roots(eta, lam)
    # g = ((1 - e^{-l2 t})/l2 - (1 - e^{-l1 t})/l1) / D, stable as lam -> 0
    g = (_decay_integral(l2, t) - _decay_integral(l1, t)) / root
    e1, e2 = math.exp(-l1 * t), math.exp(-l2 * t)
    phi = -e2 * math.expm1(-root * t) / root
    g_rate = phi
    phi_rate = (l1 * e1 - l2 * e2) / root
    return FilterEvaluation(t, lam, g, phi, g_rate, phi_rate)


def filter_dynamic(s, t, lam):
    """Filter ``g2(t, lam) = (1 - 2^s Gamma(s+1) J_s(z) / z^s) / lam`` with ``z = sqrt(lam) t``.

    Evaluated as ``(t^2/4) * bessel_series_ratio(s, z)`` so that ``lam -> 0``
    and small ``z`` give the limit ``t^2 / (4 (s+1))`` without cancellation.
    """
    s, t, lam = float(s), float(t), float(lam)
    if lam < 0 or t < 0:
        raise ValueError('need lam >= 0 and t >= 0')
    z = math.sqrt(lam) * t
    return 0.25 * t * t * bessel_series_ratio(s, z)


def filter_dynamic_rate(s, t, lam):
    """Time derivative of :func:`filter_dynamic`: ``2^s Gamma(s+1) t J_{s+1}(z) / z^(s+1)``."""
    s, t, lam = float(s), float(t), float(lam)
    z = math.sqrt(lam) * t
    if z == 0.0:
        return t / (2.0 * (s + 1.0))
    if z < 1e-3:
        # two-term series of J_{s+1}(z) / z^(s+1)
        return t / (2.0 * (s + 1.0)) * (1.0 - z * z / (4.0 * (s + 2.0)))
    return 2.0 ** s * gamma(s + 1.0) * t * bessel_j(s + 1.0, z) / z ** (s + 1.0)


def _spectral_parts(A, b, rank_tol):
    f = svd(np.asarray(A, dtype=float), rank_tol=rank_tol)
    r = f.rank
    V, s, U = f.V[:, :r], f.s[:r], f.U[:, :r]
    c = s * (U.T @ np.asarray(b, dtype=float))   # coordinates of A^T b
    return f, V, s, c


def flow_state_const(A, b, x0, xdot0, eta, t, rank_tol=DEFAULT_RANK_TOL):
    """Position and velocity of the constant-damping flow at time ``t``.

    Requires ``eta > 2 ||A||``. Components of ``x0, xdot0`` outside the row
    space of ``A`` follow the free flow ``y'' + eta y' = 0``.
    """
    f, V, s, c = _spectral_parts(A, b, rank_tol)
    if not eta > 2.0 * f.sigma_max:
        raise OverdampingError('need eta > 2 ||A|| = {}'.format(2.0 * f.sigma_max))
    x0 = np.asarray(x0, dtype=float)
    v0 = np.zeros_like(x0) if xdot0 is None else np.asarray(xdot0, dtype=float)
    a0, w0 = V.T @ x0, V.T @ v0
    x_perp, v_perp = x0 - V @ a0, v0 - V @ w0
    pos, vel = np.empty(len(s)), np.empty(len(s))
    for i, sig in enumerate(s):
        lam = sig * sig
        fe = filter_const(eta, t, lam)
        pos[i] = (1.0 - lam * fe.g) * a0[i] + fe.phi * w0[i] + fe.g * c[i]
        vel[i] = -lam * fe.g_rate * a0[i] + fe.phi_rate * w0[i] + fe.g_rate * c[i]
    free = filter_const(eta, t, 0.0)
    x = V @ pos + x_perp + free.phi * v_perp
    v = V @ vel + free.phi_rate * v_perp
    return x, v


def flow_solution_const(A, b, x0, xdot0, eta, t, rank_tol=DEFAULT_RANK_TOL):
    return flow_state_const(A, b, x0, xdot0, eta, t, rank_tol)[0]


def flow_state_dynamic(A, b, x0, s, t, rank_tol=DEFAULT_RANK_TOL):
    """Position and velocity at time ``t`` of the flow with ``eta = (1+2s)/t``,
    ``x(0) = x0`` and ``x'(0) = 0``."""
    f, V, sv, c = _spectral_parts(A, b, rank_tol)
    if t < 0:
        raise ValueError('t must be nonnegative')
    x0 = np.asarray(x0, dtype=float)
    a0 = V.T @ x0
    x_perp = x0 - V @ a0
    pos, vel = np.empty(len(sv)), np.empty(len(sv))
    for i, sig in enumerate(sv):
        lam = sig * sig
        g2 = filter_dynamic(s, t, lam)
        rate = filter_dynamic_rate(s, t, lam)
        pos[i] = (1.0 - lam * g2) * a0[i] + g2 * c[i]
        vel[i] = -lam * rate * a0[i] + rate * c[i]
    return V @ pos + x_perp, V @ vel


def flow_solution_dynamic(A, b, x0, s, t, rank_tol=DEFAULT_RANK_TOL):
    return flow_state_dynamic(A, b, x0, s, t, rank_tol)[0]
