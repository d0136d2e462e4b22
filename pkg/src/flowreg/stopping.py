"""Discrepancy-principle stopping, error metrics and run reports.

Every solver in the package is written as a generator of iterates
``x_0, x_1, ...``; :func:`drive` consumes such a generator, checks the stop
rule on each iterate *before* the next step is taken, records residual and
error histories, and detects divergence.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    'StopRule', 'RunReport', 'discrepancy_satisfied', 'relative_error',
    'first_stop_index', 'drive', 'DEFAULT_TAU', 'DEFAULT_N_MAX',
    'STOPPED_BY',
]

log = logging.getLogger(__name__)

DEFAULT_TAU = 1.03
DEFAULT_N_MAX = 5000
DIVERGENCE_FACTOR = 1e12

STOPPED_BY = ('discrepancy', 'max_iter', 'divergence', 'breakdown')


@dataclass(frozen=True)
class StopRule:
    """Morozov's discrepancy principle: stop once ``||A x_k - b|| <= tau * delta``.

    Parameters
    ----------
    tau : float
        Safety factor, positive.
    delta : float
        Noise level entering the threshold ``tau * delta``.
    n_max : int
        Iteration budget.
    """
    tau: float = DEFAULT_TAU
    delta: float = 0.0
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError('tau must be positive')
        if not self.delta >= 0:
            raise ValueError('delta must be nonnegative')
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError('n_max must be a positive integer')

    @property
    def threshold(self):
        return self.tau * self.delta


def discrepancy_satisfied(residual_norm, rule):
    if residual_norm < 0:
        raise ValueError('residual norm must be nonnegative')
    return residual_norm <= rule.threshold


def relative_error(x, x_exact):
    x = np.asarray(x, dtype=float)
    x_exact = np.asarray(x_exact, dtype=float)
    ref = np.linalg.norm(x_exact)
    if ref == 0:
        raise ValueError('exact solution is zero; relative error undefined')
    return float(np.linalg.norm(x - x_exact) / ref)


def first_stop_index(residual_history, rule):
    """Smallest ``k`` with ``residual_history[k] <= tau * delta``, or ``None``."""
    if len(residual_history) == 0:
        raise ValueError('empty residual history')
    threshold = rule.threshold
    for k, r in enumerate(residual_history):
        if r <= threshold:
            return k
    return None


@dataclass
class RunReport:
    method: str
    params: dict
    iterN: int
    l2err: float
    final_residual: float
    stopped_by: str
    residual_history: list
    error_history: list
    wall_time: float
    # the stopped iterate; not part of the serialised report
    x: np.ndarray = field(default=None, repr=False, compare=False)

    FIELDS = ('method', 'params', 'iterN', 'l2err', 'final_residual', 'stopped_by',
              'residual_history', 'error_history', 'wall_time')

    def to_dict(self, trace=True):
        out = {name: getattr(self, name) for name in self.FIELDS}
        out['params'] = dict(self.params)
        if trace:
            out['residual_history'] = [float(r) for r in self.residual_history]
            out['error_history'] = [float(e) for e in self.error_history]
        else:
            out['residual_history'] = None
            out['error_history'] = None
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**{name: data[name] for name in cls.FIELDS})


def _diverged(x, bound):
    return not np.all(np.isfinite(x)) or np.linalg.norm(x) > bound


def drive(iterates, A, b_noisy, x_exact, rule, method='', params=None):
    """Run a solver generator under ``rule`` and collect a :class:`RunReport`.

    ``iterates`` yields ``x_0, x_1, ...``. The stop rule is checked on each
    iterate before the next one is requested, so ``iterN = 0`` is possible.
    A generator that returns early is recorded as ``stopped_by='breakdown'``.
    """
    params = {} if params is None else dict(params)
    start = time.perf_counter()
    residuals, errors = [], []
    threshold = rule.threshold
    stopped_by = 'max_iter'
    x_last = None
    bound = None
    it = iter(iterates)
    try:
        with np.errstate(over='ignore', invalid='ignore'):
            for k in range(rule.n_max + 1):
                try:
                    x = next(it)
                except StopIteration:
                    stopped_by = 'breakdown'
                    break
                if bound is None:
                    bound = DIVERGENCE_FACTOR * (1.0 + np.linalg.norm(x))
                if _diverged(x, bound):
                    stopped_by = 'divergence'
                    log.info('%s diverged at step %d', method, k)
                    break
                x_last = np.array(x, dtype=float)
                res = float(np.linalg.norm(A @ x_last - b_noisy))
                residuals.append(res)
                errors.append(relative_error(x_last, x_exact))
                if res <= threshold:
                    stopped_by = 'discrepancy'
                    break
    finally:
        close = getattr(it, 'close', None)
        if close is not None:
            close()
    if x_last is None:
        raise RuntimeError('solver produced no iterates')
    iterN = len(residuals) - 1
    return RunReport(
        method=method,
        params=params,
        iterN=iterN,
        l2err=errors[-1],
        final_residual=residuals[-1],
        stopped_by=stopped_by,
        residual_history=residuals,
        error_history=errors,
        wall_time=time.perf_counter() - start,
        x=x_last,
    )
