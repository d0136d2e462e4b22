"""Damped second-order gradient flows as iterative regularisation methods.

Solves ``A x = b`` with noisy ``b`` by integrating
``x'' + eta(t) x' + A^T A x = A^T b`` with a few time-stepping schemes and
stopping by the discrepancy principle. Classical baselines, test problems,
a closed-form spectral oracle and an experiment harness are included.
"""
from .baselines import NesterovConfig, cgls_run, landweber_run, nesterov_run, nu_coefficients, nu_run
from .bench import ExperimentSpec, MethodSpec, condition_scan, load_preset, parse_method, run_experiment, sweep
from .flows import SCHEMES, DampingSchedule, run_flow
from .linalg import condition_number, singular_values, spectral_norm, svd
from .oracle import flow_solution_const, flow_solution_dynamic, quasi_solution
from .problems import add_multiplicative_noise, gaussian_convolution_problem, hilbert_problem, make_problem
from .special import bessel_j
from .stopping import RunReport, StopRule, first_stop_index

__version__ = '0.1.0'

__all__ = [
    'DampingSchedule', 'ExperimentSpec', 'MethodSpec', 'NesterovConfig', 'RunReport', 'SCHEMES',
    'StopRule', 'add_multiplicative_noise', 'bessel_j', 'cgls_run', 'condition_number',
    'condition_scan', 'first_stop_index', 'flow_solution_const', 'flow_solution_dynamic',
    'gaussian_convolution_problem', 'hilbert_problem', 'landweber_run', 'load_preset',
    'make_problem', 'nesterov_run', 'nu_coefficients', 'nu_run', 'parse_method', 'quasi_solution',
    'run_experiment', 'run_flow', 'singular_values', 'spectral_norm', 'svd', 'sweep',
]
