"""
Command-line front end: edge probabilities, predictions, critical values,
simulations, sweeps, verification tests and graph dumps.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 internal-invariant violation.
"""
import argparse
import logging
import sys
import warnings

from . import __version__
from .config import read_config
from .connectivity import is_connected, resilience_verdict
from .experiments import (EVENTS, ExperimentConfig, TrialRunner, coupling_validity_rate, degree_law_test,
                          dominance_test, gap_test, poissonization_test, run_resilience_trials, sweep_experiment)
from .generators import coupling_threshold_x, gen_model_graph, trial_stream
from .graph import min_degree
from .output import make_output, utc_now, write_json, write_run
from .records import format_number, format_rational
from .theory import (CRITICAL_AXES, ModelParams, alpha_from_params, approx_edge_prob_overlap, check_regime,
                     edge_prob_model, edge_prob_overlap, predicted_limit_prob, scaling_threshold, solve_critical)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_INVARIANT = 4

VERIFY_TESTS = ('degree', 'dominance', 'gap', 'coupling', 'poissonization')


class ContainmentViolation(AssertionError):
    """A valid coupled sample whose binomial graph is not a subgraph of its uniform graph."""


def _model_arguments():
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group('model parameters')
    group.add_argument('-n', type=int, default=1000, help='number of nodes')
    group.add_argument('-K', type=int, default=36, help='object ring size')
    group.add_argument('-P', type=int, default=10000, help='object pool size')
    group.add_argument('-d', type=int, default=2, help='shared objects needed for an edge')
    group.add_argument('-f', type=float, default=1.0, help='friendship probability')
    group.add_argument('-g', type=float, default=1.0, help='link survival probability')
    group.add_argument('-m', type=int, default=0, help='node failure budget')
    target = group.add_mutually_exclusive_group()
    target.add_argument('-t', type=float, default=None,
                        help='choose f so that the model edge probability equals this value')
    target.add_argument('--alpha', type=float, default=None,
                        help='choose f so that the scaling-law deviation equals this value')
    return parent


def _run_arguments(default_trials):
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--trials', type=int, default=default_trials)
    parent.add_argument('--seed', type=int, default=0)
    return parent


def build_parser():
    model = _model_arguments()
    parser = argparse.ArgumentParser(prog='rglab', description=__doc__.splitlines()[1])
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    edge_prob = commands.add_parser('edge-prob', parents=[model], help='exact and approximate edge probabilities')
    edge_prob.set_defaults(handler=cmd_edge_prob)

    predict = commands.add_parser('predict', parents=[model], help='scaling-law deviation and limit probability')
    predict.set_defaults(handler=cmd_predict)

    critical = commands.add_parser('critical', parents=[model], help='critical value of one parameter')
    critical.add_argument('--axis', required=True, choices=CRITICAL_AXES)
    critical.set_defaults(handler=cmd_critical)

    for name, handler in (('simulate', cmd_simulate), ('sweep', cmd_sweep)):
        command = commands.add_parser(name, parents=[model, _run_arguments(1000)],
                                      help=f'{name} resilience trials and write CSV')
        command.add_argument('--config', help='experiment configuration file (replaces model flags)')
        command.add_argument('--event', choices=EVENTS, default='resilience')
        command.add_argument('-o', '--output', default='-', help='CSV path, "-" for standard output')
        if name == 'sweep':
            command.add_argument('--axis', choices=CRITICAL_AXES)
            command.add_argument('--values', help='comma separated sweep values')
        command.set_defaults(handler=handler)

    verify = commands.add_parser('verify', parents=[model, _run_arguments(200)], help='statistical verification')
    verify.add_argument('test', choices=VERIFY_TESTS)
    verify.add_argument('-k', type=int, default=1,
                        help='connectivity order for dominance, gap and poissonization tests')
    verify.add_argument('-x', type=float, default=None,
                        help='membership probability for the poissonization test, default the coupling threshold')
    verify.set_defaults(handler=cmd_verify)

    dump = commands.add_parser('dump', parents=[model], help='sample one model graph and write its edge list')
    dump.add_argument('--seed', type=int, default=0)
    dump.add_argument('--verdict', type=int, default=None, metavar='K',
                      help='log connectivity, minimum degree and vertex connectivity against order K')
    dump.add_argument('-o', '--output', default='-')
    dump.set_defaults(handler=cmd_dump)
    return parser


def params_from_args(args):
    """
    ModelParams from flags; -t / --alpha replace f by the value hitting that target.
    """
    params = ModelParams(n=args.n, K=args.K, P=args.P, d=args.d, f=args.f, g=args.g)
    target = args.t
    if args.alpha is not None:
        target = scaling_threshold(args.n, args.m) + args.alpha / args.n
    if target is None:
        return params
    denominator = args.g * float(edge_prob_overlap(args.K, args.P, args.d))
    if target < 0 or (target > 0 and denominator == 0.0):
        raise ValueError(f'edge probability {target:.6g} cannot be reached with g={args.g}')
    f = target / denominator if target > 0 else 0.0
    if f > 1.0:
        raise ValueError(f'edge probability {target:.6g} needs f={f:.6g} > 1')
    return params.replace(f=f)


def _print(label, value):
    print(f'{label} = {value}')


def _warn_regime(args, params):
    for report in check_regime(params):
        if not report.passed:
            message = f'regime advisory {report.name}: {report.proxy:.6g} vs threshold {report.threshold:.6g}'
            print(f'warning: {message}')
            args.notices.append(message)


def cmd_edge_prob(args):
    params = params_from_args(args)
    s = edge_prob_overlap(params.K, params.P, params.d)
    t = edge_prob_model(params)
    approx = approx_edge_prob_overlap(params.K, params.P, params.d)
    for label, value in (('s', s), ('t', t)):
        rational = format_rational(value)
        if rational is not None:
            _print(label, rational)
        _print(f'{label}_float', format_number(float(value)))
    _print('s_approx', format_number(approx))
    _print('relative_error', format_number(abs(approx - float(s)) / float(s)) if s else '')
    return EXIT_OK


def cmd_predict(args):
    params = params_from_args(args)
    alpha = alpha_from_params(params, args.m)
    _print('t', format_number(float(edge_prob_model(params))))
    _print('alpha', format_number(alpha))
    _print('predicted_limit', format_number(predicted_limit_prob(alpha, args.m)))
    _warn_regime(args, params)
    return EXIT_OK


def cmd_critical(args):
    params = params_from_args(args)
    result = solve_critical(args.axis, params, args.m)
    _print(f'{args.axis}*', format_number(result.value))
    _print('feasible', 'yes' if result.feasible else 'INFEASIBLE')
    _print('boundary', 'yes' if result.boundary else 'no')
    _print('alpha', format_number(result.alpha))
    if not result.feasible:
        args.notices.append(f'critical {args.axis} infeasible (unclamped value {format_number(result.value)})')
    return EXIT_OK


def _config_from_args(args, sweep=None):
    if args.config:
        return read_config(args.config)
    return ExperimentConfig(params=params_from_args(args), m=args.m, trials=args.trials,
                            base_seed=args.seed, sweep=sweep, event=args.event)


def _sweep_from_args(args):
    if args.config:
        return None
    if not args.axis or not args.values:
        raise ValueError('sweep needs --config or both --axis and --values')
    caster = float if args.axis in ('f', 'g') else int
    try:
        values = tuple(caster(token) for token in args.values.split(',') if token.strip())
    except ValueError as err:
        raise ValueError(f'cannot read --values {args.values!r}: {err}') from err
    return args.axis, values


def cmd_simulate(args):
    started = utc_now()
    cfg = _config_from_args(args)
    if cfg.sweep is not None:
        results = sweep_experiment(cfg, TrialRunner())
    else:
        results = [run_resilience_trials(cfg, TrialRunner())]
    write_run(args.output, results, cfg, cfg.base_seed, started)
    return EXIT_OK


def cmd_sweep(args):
    started = utc_now()
    cfg = _config_from_args(args, _sweep_from_args(args))
    if cfg.sweep is None:
        raise ValueError('the configuration has no [sweep] section')
    results = sweep_experiment(cfg, TrialRunner())
    write_run(args.output, results, cfg, cfg.base_seed, started)
    return EXIT_OK


def cmd_verify(args):
    runner = TrialRunner()
    if args.test == 'coupling':
        report = coupling_validity_rate(args.n, args.K, args.P, args.d, args.trials, args.seed, runner)
        _print('x', format_number(report.x))
        _print('admissible', 'yes' if report.admissible else 'no')
        _print('validity_rate', format_number(report.rate))
        _print('oracle_rate', format_number(report.oracle_rate))
        _print('containment_violations', report.containment_failures)
    elif args.test == 'poissonization':
        x = args.x if args.x is not None else coupling_threshold_x(args.K, args.P, args.n).x
        report = poissonization_test(args.n, args.P, x, args.d, args.trials, args.k, args.seed, runner)
        _print('x', format_number(report.x))
        _print('rho', format_number(report.rho))
        _print('binomial_prob', format_number(report.binomial_prob))
        _print('multiset_prob', format_number(report.multiset_prob))
        _print('er_prob', format_number(report.er_prob))
        _print('holds', 'yes' if report.holds else 'no')
        _print('edge_frequency', format_number(report.edge_frequency))
        _print('edge_prob_asymptotic', format_number(report.edge_prob_asymptotic))
        if report.edge_check is False:
            args.notices.append(f'edge frequency is {report.edge_z:.2f} sigma from its asymptotic value')
    else:
        params = params_from_args(args)
        if args.test == 'degree':
            report = degree_law_test(params, args.trials, args.seed, runner)
            if report.guard:
                print(f'regime guard: {report.guard}')
            for row in report.rows:
                print(f'h={row.h} poisson_mean={format_number(row.poisson_mean)} '
                      f'empirical_mean={format_number(row.empirical_mean)} '
                      f'tv={format_number(row.total_variation)} p_value={format_number(row.p_value)}')
        elif args.test == 'dominance':
            report = dominance_test(params, args.trials, args.k, args.seed, runner=runner)
            _print('model_prob', format_number(report.model_prob))
            _print('er_prob', format_number(report.er_prob))
            _print('difference', format_number(report.difference))
            _print('holds', 'yes' if report.holds else 'no')
        else:
            report = gap_test(params, args.trials, args.k, args.seed, runner)
            _print('gap_frequency', format_number(report.frequency))
            _print('ci', f'[{format_number(report.ci_low)}, {format_number(report.ci_high)}]')
    with make_output('-') as stream:
        write_json(stream, report)
    if args.test == 'coupling' and report.containment_failures:
        raise ContainmentViolation(f'edge containment failed on {report.containment_failures} valid coupled samples')
    return EXIT_OK


def cmd_dump(args):
    params = params_from_args(args)
    graph = gen_model_graph(params, trial_stream(args.seed, 0))
    if args.verdict is None:
        logging.info(f'Sampled {graph}: connected={is_connected(graph)}, '
                     f'min degree={min_degree(graph) if graph.node_count else 0}')
    else:
        verdict = resilience_verdict(graph, args.verdict)
        logging.info(f'Sampled {graph}: connected={verdict.connected}, min degree={verdict.min_degree}, '
                     f'vertex connectivity={verdict.k_connected_up_to}, '
                     f'{args.verdict}-connected={verdict.satisfied}')
    with make_output(args.output) as stream:
        graph.dump_edge_list(stream)
    return EXIT_OK


def main(argv=None):
    """
    Parse argv, run the command and map failures onto exit codes.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return exit_request.code if isinstance(exit_request.code, int) else EXIT_INVALID
    args.notices = []
    try:
        code = args.handler(args)
    except AssertionError as err:
        logging.error(f'Internal invariant violated: {err}')
        print(f'error: {err}', file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as err:
        print(f'error: {err}', file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f'error: {err}', file=sys.stderr)
        return EXIT_IO

    if args.notices:
        warning_message = 'The run finished with the following notices:\n'
        for notice in args.notices:
            warning_message += f'\t{notice}\n'
        warnings.warn(warning_message)
    return code


if __name__ == '__main__':
    sys.exit(main())
