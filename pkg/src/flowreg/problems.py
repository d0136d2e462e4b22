"""Benchmark problems and the multiplicative noise model.

Two test problems are provided: a discretised Gaussian convolution (a
Fredholm equation of the first kind) and the Hilbert matrix, both with the
all-ones vector as exact solution.

Noise is drawn from :class:`SplitMix64`, a 64-bit generator defined entirely
by the constants below, so a given seed produces the same perturbation in any
implementation::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)
    u = (z >> 11) * 2**-53          # uniform on [0, 1)

(all arithmetic modulo 2**64).
"""
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    'TestProblem', 'NoisyInstance', 'SplitMix64', 'gaussian_convolution_problem',
    'hilbert_problem', 'add_multiplicative_noise', 'parse_problem', 'format_problem',
    'make_problem',
]

_MASK = (1 << 64) - 1


class SplitMix64:
    """Seeded 64-bit generator producing uniforms on ``[0, 1)``."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_uint64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, size):
        return np.array([(self.next_uint64() >> 11) * 2.0 ** -53 for _ in range(size)])


@dataclass(frozen=True)
class TestProblem:
    __test__ = False  # not a pytest class

    name: str
    A: np.ndarray
    x_exact: np.ndarray
    b_exact: np.ndarray
    params: dict

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def spec(self):
        return format_problem(self.name, self.params)


@dataclass(frozen=True)
class NoisyInstance:
    b_noisy: np.ndarray
    delta: float
    delta_prime: float
    seed: int
    delta_bound: float = float('nan')   # delta_prime * ||b_exact||


def _check_order(n):
    if int(n) != n or n < 2:
        raise ValueError('matrix order must be an integer >= 2, got {}'.format(n))
    return int(n)


def gaussian_convolution_problem(n, gamma=0.05, c=None):
    """Rectangle-rule discretisation of a Gaussian convolution on [0, 1].

    ``K[i, j] = h * c * exp(-((i - j) h)^2 / (2 gamma^2))`` with ``h = 1/n``.
    ``c`` defaults to ``1/gamma``.
    """
    n = _check_order(n)
    if not gamma > 0:
        raise ValueError('gamma must be positive')
    if c is None:
        c = 1.0 / gamma
    if not c > 0:
        raise ValueError('C must be positive')
    h = 1.0 / n
    d = np.arange(n)
    K = h * c * np.exp(-((d[:, None] - d[None, :]) * h) ** 2 / (2.0 * gamma ** 2))
    x = np.ones(n)
    return TestProblem('conv', K, x, K @ x, {'n': n, 'gamma': float(gamma), 'C': float(c)})


def hilbert_problem(n):
    n = _check_order(n)
    i = np.arange(1, n + 1)
    A = 1.0 / (i[:, None] + i[None, :] - 1.0)
    x = np.ones(n)
    return TestProblem('hilbert', A, x, A @ x, {'n': n})


def add_multiplicative_noise(problem, delta_prime, seed, uniform=None):
    """Perturb each entry ``b_i`` by a factor ``1 + 2 (u_i - 1/2) delta_prime``.

    ``u_i`` are drawn independently per component from ``SplitMix64(seed)``
    unless a ``uniform(size)`` callable is supplied. The returned ``delta`` is
    the realised ``||b_noisy - b_exact||``; ``delta_bound`` is its a priori
    bound ``delta_prime ||b_exact||``.
    """
    if not delta_prime >= 0:
        raise ValueError('delta_prime must be nonnegative')
    b = problem.b_exact
    if uniform is None:
        uniform = SplitMix64(seed).uniform
    u = np.asarray(uniform(b.shape[0]), dtype=float)
    b_noisy = (1.0 + 2.0 * (u - 0.5) * delta_prime) * b
    if delta_prime == 0:
        b_noisy = b.copy()
    delta = float(np.linalg.norm(b_noisy - b))
    bound = float(delta_prime) * float(np.linalg.norm(b))
    return NoisyInstance(b_noisy, delta, float(delta_prime), int(seed), bound)


_PROBLEM_KEYS = {'conv': {'n', 'gamma', 'C'}, 'hilbert': {'n'}}


def parse_problem(text):
    """Parse ``conv:n=<int>,gamma=<real>,C=<real>`` or ``hilbert:n=<int>``.

    Returns ``(name, params)``. ``gamma`` and ``C`` are optional for ``conv``.
    """
    m = re.fullmatch(r'\s*(\w+)\s*(?::(.*))?', text)
    if not m or m.group(1) not in _PROBLEM_KEYS:
        raise ValueError('unknown problem spec {!r}'.format(text))
    name, rest = m.group(1), m.group(2) or ''
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(','))):
        key, sep, value = item.partition('=')
        key = key.strip()
        if not sep or key not in _PROBLEM_KEYS[name]:
            raise ValueError('bad parameter {!r} in problem spec {!r}'.format(item, text))
        params[key] = int(value) if key == 'n' else float(value)
    if 'n' not in params:
        raise ValueError('problem spec {!r} needs n=<int>'.format(text))
    return name, params


def format_problem(name, params):
    keys = ['n', 'gamma', 'C'] if name == 'conv' else ['n']
    return '{}:{}'.format(name, ','.join('{}={}'.format(k, _fmt(params[k])) for k in keys if k in params))


def _fmt(v):
    return str(v) if isinstance(v, int) else repr(float(v))


def make_problem(spec, **overrides):
    """Build a :class:`TestProblem` from a spec string, optionally overriding parameters."""
    name, params = parse_problem(spec) if isinstance(spec, str) else spec
    params = {**params, **overrides}
    if name == 'conv':
        return gaussian_convolution_problem(params['n'], params.get('gamma', 0.05), params.get('C'))
    return hilbert_problem(params['n'])
