"""Classical iterative regularisation methods used as baselines.

Landweber iteration, CGLS (conjugate gradients on the normal equations
without forming ``A^T A``), Brakhage's nu-method and Nesterov's accelerated
gradient scheme. Each method has a pure step function and a generator of
iterates; ``*_run`` wraps the generator with the discrepancy stop rule.
"""
from dataclasses import dataclass

import numpy as np

from .linalg import spectral_norm
from .stopping import StopRule, drive

__all__ = [
    'NuCoefficients', 'NesterovConfig', 'landweber_step', 'nu_coefficients',
    'nu_step', 'nesterov_step', 'landweber_iterates', 'nu_iterates',
    'nesterov_iterates', 'cgls_iterates', 'landweber_run', 'nu_run',
    'nesterov_run', 'cgls_run',
]


def _gradient(A, b, x):
    return A.T @ (A @ x - b)


def _default_rule(noisy, rule):
    return StopRule(delta=noisy.delta) if rule is None else rule


def landweber_step(x, A, b, dt):
    return x - dt * _gradient(A, b, x)


def landweber_iterates(A, b, dt, x0, sigma_max=None):
    if sigma_max is None:
        sigma_max = spectral_norm(A)
    if not 0 < dt < 2.0 / sigma_max ** 2:
        raise ValueError('Landweber step {} outside (0, 2/||A||^2) = (0, {:.6g})'.format(dt, 2.0 / sigma_max ** 2))
    x = np.array(x0, dtype=float)
    while True:
        yield x
        x = landweber_step(x, A, b, dt)


@dataclass(frozen=True)
class NuCoefficients:
    nu: float
    k: int
    mu: float
    omega: float


def nu_coefficients(nu, k):
    """Momentum ``mu_k`` and step weight ``omega_k`` of the nu-method."""
    if not nu > 0:
        raise ValueError('nu must be positive')
    if k < 1:
        raise ValueError('k must be >= 1')
    if k == 1:
        return NuCoefficients(nu, 1, 0.0, (4 * nu + 2) / (4 * nu + 1))
    mu = ((k - 1) * (2 * k - 3) * (2 * k + 2 * nu - 1)
          / ((k + 2 * nu - 1) * (2 * k + 4 * nu - 1) * (2 * k + 2 * nu - 3)))
    omega = 4 * (2 * k + 2 * nu - 1) * (k + nu - 1) / ((k + 2 * nu - 1) * (2 * k + 4 * nu - 1))
    return NuCoefficients(nu, k, mu, omega)


def nu_step(prev_x, cur_x, A, b, nu, k, omega_norm):
    """Step ``k`` (``k >= 1``) of the nu-method, producing ``x_k`` from ``x_{k-1}``, ``x_{k-2}``.

    ``x_k = x_{k-1} + mu_k (x_{k-1} - x_{k-2}) - omega_norm omega_k A^T (A x_{k-1} - b)``
    """
    c = nu_coefficients(nu, k)
    return cur_x + c.mu * (cur_x - prev_x) - omega_norm * c.omega * _gradient(A, b, cur_x)


def nu_iterates(A, b, nu, x0, omega_norm=None):
    if omega_norm is None:
        omega_norm = 1.0 / spectral_norm(A) ** 2
    prev = cur = np.array(x0, dtype=float)
    k = 0
    while True:
        yield cur
        k += 1
        prev, cur = cur, nu_step(prev, cur, A, b, nu, k, omega_norm)


@dataclass(frozen=True)
class NesterovConfig:
    """Parameters of Nesterov's scheme; ``0 < omega <= 1/||A||^2``."""
    alpha: float = 3.0
    omega: float = 0.16

    def __post_init__(self):
        if not self.alpha >= 3:
            raise ValueError('alpha must be >= 3')
        if not self.omega > 0:
            raise ValueError('omega must be positive')

    def check(self, sigma_max):
        if self.omega > 1.0 / sigma_max ** 2:
            raise ValueError('Nesterov step {} exceeds 1/||A||^2 = {:.6g}'.format(self.omega, 1.0 / sigma_max ** 2))


def nesterov_step(prev_x, cur_x, A, b, cfg, k):
    """``x_{k+1} = x_k + (k-1)/(k+alpha-1) (x_k - x_{k-1}) - omega A^T (A x_k - b)``."""
    factor = (k - 1) / (k + cfg.alpha - 1)
    return cur_x + factor * (cur_x - prev_x) - cfg.omega * _gradient(A, b, cur_x)


def nesterov_iterates(A, b, cfg, x0, sigma_max=None):
    cfg.check(spectral_norm(A) if sigma_max is None else sigma_max)
    prev = cur = np.array(x0, dtype=float)
    k = 0
    while True:
        yield cur
        prev, cur = cur, nesterov_step(prev, cur, A, b, cfg, k)
        k += 1


# ||A^T r|| below this multiple of ||A||_F ||r|| means r is orthogonal to range(A)
# up to rounding; iterating further only amplifies roundoff
CGLS_ORTHO_TOL = 1e-14


def cgls_iterates(A, b, x0=None):
    """CGLS iterates; the generator returns once the least-squares residual is reached."""
    x = np.zeros(A.shape[1]) if x0 is None else np.array(x0, dtype=float)
    a_norm = float(np.linalg.norm(A))
    r = b - A @ x
    s = A.T @ r
    p = s.copy()
    gamma = float(s @ s)
    yield x
    while True:
        if np.sqrt(gamma) <= CGLS_ORTHO_TOL * a_norm * np.linalg.norm(r):
            return
        w = A @ p
        ww = float(w @ w)
        if ww == 0.0:
            return
        alpha = gamma / ww
        x = x + alpha * p
        r = r - alpha * w
        s = A.T @ r
        gamma_new = float(s @ s)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
        yield x


def landweber_run(problem, noisy, dt, rule=None, x0=None, label='landweber'):
    x0 = np.zeros(problem.n) if x0 is None else x0
    return drive(landweber_iterates(problem.A, noisy.b_noisy, dt, x0), problem.A, noisy.b_noisy,
                 problem.x_exact, _default_rule(noisy, rule), method=label, params={'dt': float(dt)})


def nu_run(problem, noisy, nu, rule=None, x0=None, omega_norm=None, label=None):
    x0 = np.zeros(problem.n) if x0 is None else x0
    return drive(nu_iterates(problem.A, noisy.b_noisy, nu, x0, omega_norm), problem.A, noisy.b_noisy,
                 problem.x_exact, _default_rule(noisy, rule), method=label or 'nu:{}'.format(nu),
                 params={'nu': float(nu)})


def nesterov_run(problem, noisy, cfg, rule=None, x0=None, label='nesterov'):
    x0 = np.zeros(problem.n) if x0 is None else x0
    return drive(nesterov_iterates(problem.A, noisy.b_noisy, cfg, x0), problem.A, noisy.b_noisy,
                 problem.x_exact, _default_rule(noisy, rule), method=label,
                 params={'alpha': cfg.alpha, 'omega': cfg.omega})


def cgls_run(problem, noisy, rule=None, label='cg'):
    return drive(cgls_iterates(problem.A, noisy.b_noisy), problem.A, noisy.b_noisy,
                 problem.x_exact, _default_rule(noisy, rule), method=label, params={})
