"""Experiment harness: method bundles, presets, sweeps and CSV/JSON output.

An experiment is one problem, one relative noise level, a list of seeds and
a list of method bundles. Each (method, seed) pair produces one
:class:`~flowreg.stopping.RunReport`; results are always ordered by method
(in spec order) and then by seed, whatever the degree of parallelism.

Config files are flat ``key = value`` text; see ``presets/table1.cfg``.
"""
import csv
import io
import json
import re
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .baselines import (NesterovConfig, cgls_iterates, landweber_iterates, nesterov_iterates,
                        nu_iterates)
from .flows import SCHEMES, DampingSchedule, flow_iterates
from .linalg import is_numerically_singular, singular_values, spectral_norm
from .problems import add_multiplicative_noise, format_problem, make_problem, parse_problem
from .stopping import DEFAULT_N_MAX, DEFAULT_TAU, StopRule, drive

__all__ = [
    'MethodSpec', 'ExperimentSpec', 'NOISE_LEVELS', 'CSV_HEADER', 'parse_method',
    'parse_seeds', 'load_config', 'parse_config', 'load_preset', 'solve',
    'run_experiment', 'sweep', 'summarize', 'condition_scan', 'write_csv',
    'csv_rows', 'format_number', 'noise_level',
]

CSV_HEADER = ('method', 'problem', 'n', 'delta_prime', 'seed', 'tau', 'dt', 'damping',
              'iterN', 'l2err', 'final_residual', 'stopped_by', 'wall_ms')

# 'realized': delta = ||b_noisy - b_exact||; 'bound': delta = delta_prime ||b_exact||
NOISE_LEVELS = ('realized', 'bound')

BASELINES = ('landweber', 'cg', 'nu', 'nesterov')
SWEEP_PARAMS = ('dt', 'tau', 'n')


@dataclass(frozen=True)
class MethodSpec:
    """A solver together with its parameters.

    ``kind`` is a flow scheme (``se``, ``sv``, ``msv``, ``rk4``) or a baseline
    (``landweber``, ``cg``, ``nu``, ``nesterov``).
    """
    kind: str
    label: str = ''
    dt: float = None
    damping: DampingSchedule = None
    nu: float = None
    alpha: float = None
    omega: float = None

    def __post_init__(self):
        if self.kind in SCHEMES:
            if self.dt is None or self.damping is None:
                raise ValueError('flow scheme {!r} needs dt and damping'.format(self.kind))
        elif self.kind == 'landweber':
            if self.dt is None:
                raise ValueError('landweber needs dt')
        elif self.kind == 'nu':
            if self.nu is None or not self.nu > 0:
                raise ValueError('nu-method needs nu > 0')
        elif self.kind == 'nesterov':
            NesterovConfig(self.alpha, self.omega)
        elif self.kind != 'cg':
            raise ValueError('unknown method {!r}'.format(self.kind))
        if self.dt is not None and not self.dt > 0:
            raise ValueError('dt must be positive')
        if not self.label:
            object.__setattr__(self, 'label', self.spec)

    @property
    def spec(self):
        if self.kind == 'nu':
            return 'nu:{}'.format(format_number(self.nu))
        if self.kind == 'nesterov':
            return 'nesterov:alpha={},omega={}'.format(format_number(self.alpha), format_number(self.omega))
        return self.kind

    @property
    def uses_dt(self):
        return self.kind in SCHEMES or self.kind == 'landweber'


def parse_method(text, dt=None, damping=None, label=''):
    """Parse a method spec string.

    Accepts ``se``, ``sv``, ``msv``, ``rk4``, ``landweber``, ``cg``,
    ``nu:<real>`` and ``nesterov:alpha=<real>,omega=<real>``. Step size and
    damping may be given as arguments or inline as ``dt=<real>`` and
    ``damping=<spec>`` tokens separated by whitespace.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError('empty method spec')
    head, extra = tokens[0], tokens[1:]
    for tok in extra:
        key, sep, value = tok.partition('=')
        if key == 'dt' and sep:
            dt = float(value)
        elif key == 'damping' and sep:
            damping = value
        else:
            raise ValueError('unexpected token {!r} in method spec {!r}'.format(tok, text))
    if isinstance(damping, str):
        damping = DampingSchedule.parse(damping)
    kind, _, arg = head.partition(':')
    kw = {}
    if kind == 'nu':
        kw['nu'] = float(arg)
    elif kind == 'nesterov':
        opts = dict(item.split('=', 1) for item in arg.split(',') if item)
        unknown = set(opts) - {'alpha', 'omega'}
        if unknown or len(opts) != 2:
            raise ValueError('nesterov spec needs alpha=<real>,omega=<real>, got {!r}'.format(head))
        kw['alpha'] = float(opts['alpha'])
        kw['omega'] = float(opts['omega'])
    elif arg:
        raise ValueError('method {!r} takes no argument'.format(kind))
    if kind not in SCHEMES:
        damping = None
    if kind not in SCHEMES and kind != 'landweber':
        dt = None
    return MethodSpec(kind, label, dt, damping, **kw)


def parse_seeds(text):
    """``"0-19"``, ``"1,2,5"`` or a mix of both."""
    seeds = []
    for part in str(text).split(','):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r'(\d+)\s*-\s*(\d+)', part)
        if m:
            seeds.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError('no seeds in {!r}'.format(text))
    return seeds


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    delta_prime: float
    seeds: tuple
    methods: tuple
    tau: float = DEFAULT_TAU
    n_max: int = DEFAULT_N_MAX
    noise_level: str = 'realized'
    name: str = ''

    def __post_init__(self):
        parse_problem(self.problem)
        if not self.methods:
            raise ValueError('experiment needs at least one method')
        if not self.seeds:
            raise ValueError('experiment needs at least one seed')
        if not self.delta_prime >= 0:
            raise ValueError('delta_prime must be nonnegative')
        if self.noise_level not in NOISE_LEVELS:
            raise ValueError('noise_level must be one of {}'.format(NOISE_LEVELS))
        StopRule(self.tau, 0.0, self.n_max)
        object.__setattr__(self, 'seeds', tuple(int(s) for s in self.seeds))
        object.__setattr__(self, 'methods', tuple(self.methods))

    def method(self, label):
        for m in self.methods:
            if m.label == label:
                return m
        raise KeyError(label)

    def select(self, labels):
        return replace(self, methods=tuple(self.method(lab) for lab in labels))


def parse_config(text, name=''):
    """Parse flat ``key = value`` config text into an :class:`ExperimentSpec`.

    Keys: ``problem``, ``delta_prime``, ``seeds``, ``tau``, ``n_max``,
    ``noise_level`` and one ``method.<label> = <method spec>`` line per method.
    ``#`` starts a comment.
    """
    values, methods = {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValueError('line {}: expected key = value'.format(lineno))
        if key.startswith('method.'):
            methods.append(parse_method(value, label=key[len('method.'):]))
        elif key in ('problem', 'delta_prime', 'seeds', 'tau', 'n_max', 'noise_level'):
            values[key] = value
        else:
            raise ValueError('line {}: unknown key {!r}'.format(lineno, key))
    missing = {'problem', 'delta_prime', 'seeds'} - set(values)
    if missing:
        raise ValueError('config is missing {}'.format(', '.join(sorted(missing))))
    return ExperimentSpec(
        problem=values['problem'],
        delta_prime=float(values['delta_prime']),
        seeds=tuple(parse_seeds(values['seeds'])),
        methods=tuple(methods),
        tau=float(values.get('tau', DEFAULT_TAU)),
        n_max=int(values.get('n_max', DEFAULT_N_MAX)),
        noise_level=values.get('noise_level', 'realized'),
        name=name,
    )


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), name=str(path))


def load_preset(name):
    """Load a shipped preset (``table1`` or ``table2``)."""
    try:
        text = resources.files('flowreg').joinpath('presets', name + '.cfg').read_text()
    except FileNotFoundError:
        raise ValueError('unknown preset {!r}'.format(name)) from None
    return parse_config(text, name=name)


def noise_level(noisy, mode):
    if mode == 'realized':
        return noisy.delta
    if mode == 'bound':
        return noisy.delta_bound
    raise ValueError('unknown noise level convention {!r}'.format(mode))


def _iterates(method, problem, b, sigma_max):
    A = problem.A
    x0 = np.zeros(problem.n)
    if method.kind in SCHEMES:
        return flow_iterates(method.kind, A, b, method.damping, method.dt, x0)
    if method.kind == 'landweber':
        return landweber_iterates(A, b, method.dt, x0, sigma_max=sigma_max)
    if method.kind == 'cg':
        return cgls_iterates(A, b, x0)
    if method.kind == 'nu':
        return nu_iterates(A, b, method.nu, x0, omega_norm=1.0 / sigma_max ** 2)
    return nesterov_iterates(A, b, NesterovConfig(method.alpha, method.omega), x0, sigma_max=sigma_max)


def solve(method, problem, noisy, tau=DEFAULT_TAU, n_max=DEFAULT_N_MAX, noise_mode='realized',
          sigma_max=None):
    """Run one method on one noisy instance with discrepancy stopping."""
    if sigma_max is None:
        sigma_max = spectral_norm(problem.A)
    stop_delta = noise_level(noisy, noise_mode)
    rule = StopRule(tau, stop_delta, n_max)
    params = {
        'problem': problem.spec,
        'n': problem.n,
        'delta_prime': noisy.delta_prime,
        'seed': noisy.seed,
        'tau': float(tau),
        'dt': method.dt,
        'damping': str(method.damping) if method.damping is not None else None,
        'spec': method.spec,
        'delta': noisy.delta,
        'noise_level': noise_mode,
        'stop_delta': stop_delta,
        'threshold': rule.threshold,
    }
    if method.kind == 'nu':
        params['nu'] = method.nu
    elif method.kind == 'nesterov':
        params.update(alpha=method.alpha, omega=method.omega)
    return drive(_iterates(method, problem, noisy.b_noisy, sigma_max), problem.A, noisy.b_noisy,
                 problem.x_exact, rule, method=method.label, params=params)


def run_experiment(spec, jobs=1):
    """Run every (method, seed) pair of ``spec``; results ordered by method, then seed."""
    problem = make_problem(spec.problem)
    sigma_max = spectral_norm(problem.A)
    noisy = {seed: add_multiplicative_noise(problem, spec.delta_prime, seed) for seed in spec.seeds}
    tasks = [(m, seed) for m in spec.methods for seed in spec.seeds]

    def task(item):
        m, seed = item
        return solve(m, problem, noisy[seed], spec.tau, spec.n_max, spec.noise_level, sigma_max)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(task, tasks))
    return [task(t) for t in tasks]


def sweep(spec, param, values, jobs=1):
    """Repeat the experiment for each value of ``dt``, ``tau`` or ``n``.

    Returns ``(reports, summary)`` where ``reports`` is the flat list of run
    reports (value-major) and ``summary`` holds one row per (value, method)
    with median IterN and L2err across seeds.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError('sweep parameter must be one of {}'.format(SWEEP_PARAMS))
    if param == 'dt':
        bad = [m.label for m in spec.methods if not m.uses_dt]
        if bad:
            raise ValueError('dt does not apply to {}'.format(', '.join(bad)))
    reports, summary = [], []
    for value in values:
        if param == 'dt':
            sub = replace(spec, methods=tuple(replace(m, dt=float(value)) for m in spec.methods))
        elif param == 'tau':
            sub = replace(spec, tau=float(value))
        else:
            name, params = parse_problem(spec.problem)
            params['n'] = int(value)
            sub = replace(spec, problem=format_problem(name, params))
        runs = run_experiment(sub, jobs=jobs)
        reports.extend(runs)
        for row in summarize(runs):
            summary.append({param: value, **row})
    return reports, summary


def summarize(reports):
    """Median IterN and L2err per method label, in first-seen order."""
    groups = {}
    for r in reports:
        groups.setdefault(r.method, []).append(r)
    rows = []
    for label, runs in groups.items():
        stops = {}
        for r in runs:
            stops[r.stopped_by] = stops.get(r.stopped_by, 0) + 1
        rows.append({
            'method': label,
            'runs': len(runs),
            'median_iterN': statistics.median(r.iterN for r in runs),
            'median_l2err': statistics.median(r.l2err for r in runs),
            'stopped_by': stops,
        })
    return rows


def condition_scan(family, n_values, **params):
    """Condition numbers of ``conv`` or ``hilbert`` matrices over ``n_values``.

    Returns rows ``{'n', 'kappa', 'singular'}``; ``singular`` flags a smallest
    singular value below the default rank tolerance.
    """
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError('n values must be strictly ascending')
    rows = []
    for n in n_values:
        problem = make_problem((family, {**params, 'n': n}))
        s = singular_values(problem.A)
        kappa = float(s[0] / s[-1]) if s[-1] > 0 else float('inf')
        rows.append({'n': n, 'kappa': kappa, 'singular': is_numerically_singular(s)})
    return rows


def format_number(x):
    """Locale-free text for a number: integers plainly, floats via shortest repr."""
    if x is None:
        return ''
    if isinstance(x, (bool, np.bool_)):
        return 'true' if x else 'false'
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def csv_rows(reports, timing=True):
    for r in reports:
        p = r.params
        yield {
            'method': r.method,
            'problem': p.get('problem', ''),
            'n': format_number(p.get('n')),
            'delta_prime': format_number(p.get('delta_prime')),
            'seed': format_number(p.get('seed')),
            'tau': format_number(p.get('tau')),
            'dt': format_number(p.get('dt')),
            'damping': p.get('damping') or '',
            'iterN': format_number(r.iterN),
            'l2err': format_number(r.l2err),
            'final_residual': format_number(r.final_residual),
            'stopped_by': r.stopped_by,
            'wall_ms': format_number(r.wall_time * 1000.0 if timing else 0),
        }


def write_csv(reports, fh=None, timing=True):
    """Write run reports as CSV with :data:`CSV_HEADER`; returns the text if ``fh`` is None."""
    out = io.StringIO() if fh is None else fh
    writer = csv.DictWriter(out, fieldnames=CSV_HEADER, lineterminator='\n')
    writer.writeheader()
    for row in csv_rows(reports, timing):
        writer.writerow(row)
    if fh is None:
        return out.getvalue()


def write_json(reports, fh, trace=False, timing=True):
    docs = []
    for r in reports:
        d = r.to_dict(trace=trace)
        if not timing:
            d['wall_time'] = 0.0
        docs.append(d)
    json.dump(docs if len(docs) != 1 else docs[0], fh, indent=2, sort_keys=False, default=_json_default)
    fh.write('\n')


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError('not JSON serialisable: {!r}'.format(obj))
