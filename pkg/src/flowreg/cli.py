"""Command-line entry point: ``flowreg {solve,sweep,table,cond,oracle}``."""
import argparse
import csv
import json
import sys
from contextlib import nullcontext
from dataclasses import replace

import numpy as np

from . import bench
from .flows import DampingSchedule
from .linalg import spectral_norm
from .oracle import OverdampingError, flow_solution_const, flow_solution_dynamic, quasi_solution
from .problems import add_multiplicative_noise, make_problem
from .stopping import DEFAULT_N_MAX, DEFAULT_TAU, relative_error


def _floats(text):
    return [float(v) for v in text.split(',') if v.strip()]


def _int_list(text):
    return bench.parse_seeds(text)


def _open_out(path):
    if path in (None, '-'):
        return nullcontext(sys.stdout)
    return open(path, 'w', newline='')


def _load_spec(args):
    spec = bench.load_config(args.config) if args.config else bench.load_preset(args.preset)
    if args.methods:
        spec = spec.select([m.strip() for m in args.methods.split(',')])
    if args.seeds:
        spec = replace(spec, seeds=tuple(_int_list(args.seeds)))
    if args.noise is not None:
        spec = replace(spec, delta_prime=args.noise)
    if args.noise_level:
        spec = replace(spec, noise_level=args.noise_level)
    return spec


def _print_summary(rows, key=None, fh=sys.stdout):
    head = ([key] if key else []) + ['method', 'median_iterN', 'median_l2err', 'stopped_by']
    print('  '.join('{:>12}'.format(h) for h in head), file=fh)
    for r in rows:
        stops = ','.join('{}={}'.format(k, v) for k, v in r['stopped_by'].items())
        cells = ([bench.format_number(r[key])] if key else []) + [
            r['method'], bench.format_number(r['median_iterN']), '{:.4e}'.format(r['median_l2err']), stops]
        print('  '.join('{:>12}'.format(c) for c in cells), file=fh)


def cmd_solve(args):
    problem = make_problem(args.problem)
    noisy = add_multiplicative_noise(problem, args.noise, args.seed)
    method = bench.parse_method(args.method, dt=args.dt, damping=args.damping)
    report = bench.solve(method, problem, noisy, args.tau, args.max_iter, args.noise_level)
    with _open_out(args.out) as fh:
        bench.write_json([report], fh, trace=args.trace, timing=not args.no_timing)
    return 0


def cmd_table(args):
    spec = _load_spec(args)
    reports = bench.run_experiment(spec, jobs=args.jobs)
    _write_outputs(args, reports)
    _print_summary(bench.summarize(reports), fh=sys.stderr if args.csv == '-' else sys.stdout)
    return 0


def cmd_sweep(args):
    spec = _load_spec(args)
    values = _floats(args.values)
    if args.param == 'n':
        values = [int(v) for v in values]
    reports, rows = bench.sweep(spec, args.param, values, jobs=args.jobs)
    _write_outputs(args, reports)
    if args.summary:
        with _open_out(args.summary) as fh:
            w = csv.writer(fh, lineterminator='\n')
            w.writerow([args.param, 'method', 'median_iterN', 'median_l2err', 'divergent_runs'])
            for r in rows:
                w.writerow([bench.format_number(r[args.param]), r['method'],
                            bench.format_number(r['median_iterN']), bench.format_number(r['median_l2err']),
                            r['stopped_by'].get('divergence', 0)])
    _print_summary(rows, key=args.param, fh=sys.stderr if args.csv == '-' else sys.stdout)
    return 0


def _write_outputs(args, reports):
    timing = not args.no_timing
    if args.csv:
        with _open_out(args.csv) as fh:
            bench.write_csv(reports, fh, timing=timing)
    if args.json:
        with open(args.json, 'w') as fh:
            bench.write_json(reports, fh, trace=args.trace, timing=timing)


def cmd_cond(args):
    params = {}
    if args.family == 'conv':
        params = {'gamma': args.gamma, 'C': args.C}
    rows = bench.condition_scan(args.family, _int_list(args.n), **{k: v for k, v in params.items() if v is not None})
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator='\n')
        w.writerow(['n', 'kappa', 'singular'])
        for r in rows:
            w.writerow([r['n'], bench.format_number(r['kappa']), bench.format_number(r['singular'])])
    return 0


def cmd_oracle(args):
    problem = make_problem(args.problem)
    noisy = add_multiplicative_noise(problem, args.noise, args.seed)
    A, b = problem.A, noisy.b_noisy
    x0 = np.zeros(problem.n)
    sched = DampingSchedule.parse(args.damping)
    out = {'problem': problem.spec, 'delta_prime': args.noise, 'seed': args.seed,
           'damping': str(sched), 'sigma_max': spectral_norm(A)}
    xq = quasi_solution(A, b)
    out['quasi_solution'] = {'l2err': relative_error(xq, problem.x_exact),
                             'residual': float(np.linalg.norm(A @ xq - b))}
    traj = []
    for t in _floats(args.times):
        if sched.kind == 'const':
            x = flow_solution_const(A, b, x0, None, sched.value, t)
        elif sched.kind == 'dyn':
            x = flow_solution_dynamic(A, b, x0, sched.value, t)
        else:
            raise ValueError('no closed form for damping {}'.format(sched))
        traj.append({'t': t, 'l2err': relative_error(x, problem.x_exact),
                     'residual': float(np.linalg.norm(A @ x - b))})
    out['trajectory'] = traj
    with _open_out(args.out) as fh:
        json.dump(out, fh, indent=2)
        fh.write('\n')
    return 0


def _experiment_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument('--preset', default='table1', help='shipped preset: table1 or table2 (default table1)')
    src.add_argument('--config', help='path to a key = value experiment file')
    p.add_argument('--methods', help='comma-separated method labels to keep')
    p.add_argument('--seeds', help='seed list, e.g. 0-19 or 1,4,7')
    p.add_argument('--noise', type=float, help='override relative noise level delta_prime')
    p.add_argument('--noise-level', choices=bench.NOISE_LEVELS,
                   help='stop threshold uses the realised noise norm or the bound delta_prime*||b||')
    p.add_argument('--jobs', type=int, default=1, help='worker threads (output order is unaffected)')
    p.add_argument('--csv', help="CSV of all runs ('-' for stdout)")
    p.add_argument('--json', help='JSON array of run reports')
    p.add_argument('--trace', action='store_true', help='include residual/error histories in JSON')
    p.add_argument('--no-timing', action='store_true', help='write wall_ms as 0 for byte-stable output')


def build_parser():
    parser = argparse.ArgumentParser(prog='flowreg', description=__doc__)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', help='run one method on one noisy problem')
    p.add_argument('--problem', required=True, help='e.g. conv:n=100,gamma=0.05,C=20 or hilbert:n=100')
    p.add_argument('--noise', type=float, default=0.01, help='relative noise level delta_prime')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--method', required=True,
                   help='se|sv|msv|rk4|landweber|cg|nu:<real>|nesterov:alpha=<a>,omega=<w>')
    p.add_argument('--dt', type=float)
    p.add_argument('--damping', help='const:<eta>, dyn:<s> or invsqrt')
    p.add_argument('--tau', type=float, default=DEFAULT_TAU)
    p.add_argument('--max-iter', type=int, default=DEFAULT_N_MAX)
    p.add_argument('--noise-level', choices=bench.NOISE_LEVELS, default='realized')
    p.add_argument('--out', help='JSON output path (default stdout)')
    p.add_argument('--trace', action='store_true')
    p.add_argument('--no-timing', action='store_true')
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser('table', help='run a full method/seed experiment and print medians')
    _experiment_args(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser('sweep', help='repeat an experiment over dt, tau or n')
    _experiment_args(p)
    p.add_argument('--param', required=True, choices=bench.SWEEP_PARAMS)
    p.add_argument('--values', required=True, help='comma-separated values')
    p.add_argument('--summary', help='CSV of per-value medians')
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('cond', help='condition numbers over matrix orders')
    p.add_argument('--family', choices=('conv', 'hilbert'), required=True)
    p.add_argument('--n', required=True, help='ascending orders, e.g. 2-12 or 10,20,40')
    p.add_argument('--gamma', type=float)
    p.add_argument('--C', type=float)
    p.add_argument('--out')
    p.set_defaults(func=cmd_cond)

    p = sub.add_parser('oracle', help='closed-form flow and quasi-solution errors')
    p.add_argument('--problem', required=True)
    p.add_argument('--noise', type=float, default=0.0)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--damping', required=True, help='const:<eta> (overdamped) or dyn:<s>')
    p.add_argument('--times', default='1,5,10,50', help='comma-separated times')
    p.add_argument('--out')
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OverdampingError) as exc:
        print('flowreg: error: {}'.format(exc), file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
