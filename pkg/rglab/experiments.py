"""
Monte-Carlo harness: resilience trials, parameter sweeps following the figure
protocol, and statistical checks of the degree law, the Erdos-Renyi dominance,
the min-degree/connectivity gap, the binomial coupling and the Poissonization chain.

Trial i always draws from trial_stream(base_seed, i, lane), so results do not
depend on the number of worker processes or on completion order.
"""
import logging
import math
import time
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool

import numpy as np
from scipy.stats import binom, chisquare, poisson

from .config import worker_count
from .connectivity import (is_k_connected, min_degree_at_least, survives_node_failures,
                           survives_sampled_failures)
from .generators import (coupling_threshold_x, gen_coupled_pair, gen_er, gen_model_graph, gen_multiset_graph,
                         gen_object_rings_binomial, graph_from_rings, half_count_summary, poissonization_terms,
                         trial_stream)
from .graph import degree_histogram
from .theory import (CRITICAL_AXES, ModelParams, alpha_from_params, check_regime, edge_prob_model,
                     poisson_degree_mean, predicted_limit_prob, solve_critical, wilson_interval)

# z = t (1 - DOMINANCE_SLACK) for the Erdos-Renyi graph dominated by the model
DOMINANCE_SLACK = 0.02
DEGREE_LAW_DEGREES = (0, 1, 2, 3)
EVENTS = ('resilience', 'min_degree', 'sampled_failures')
# random m-subsets removed per graph by the sampled_failures event
SAMPLED_FAILURE_SUBSETS = 200
# exact k-connectivity above this size is only run for small k
GAP_COST_GUARD = (500, 3)
# P x^2 at or below which the edge frequency of H_d is held to its asymptotic value
EDGE_CHECK_REGIME = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    m: int = 0
    trials: int = 1000
    base_seed: int = 0
    sweep: tuple = None
    event: str = 'resilience'

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f'trials must be at least 1, got {self.trials}')
        if self.m < 0:
            raise ValueError(f'failure budget m must be non-negative, got {self.m}')
        if not 0 <= self.base_seed < 2 ** 64:
            raise ValueError(f'seed must be a 64-bit unsigned integer, got {self.base_seed}')
        if self.event not in EVENTS:
            raise ValueError(f'event must be one of {", ".join(EVENTS)}, got {self.event!r}')
        if self.sweep is not None:
            axis, values = self.sweep
            if axis not in CRITICAL_AXES:
                raise ValueError(f'sweep axis must be one of {", ".join(CRITICAL_AXES)}, got {axis!r}')
            for value in values:
                try:
                    self.point(axis, value)
                except ValueError as err:
                    raise ValueError(f'sweep value {axis}={value} invalid: {err}') from err

    def point(self, axis, value):
        """(params, m) with one axis replaced."""
        if axis == 'm':
            if value < 0:
                raise ValueError(f'failure budget m must be non-negative, got {value}')
            return self.params, int(value)
        return self.params.replace(**{axis: value}), self.m

    def points(self):
        if self.sweep is None:
            yield None, None, self.params, self.m
            return
        axis, values = self.sweep
        for value in values:
            params, m = self.point(axis, value)
            yield axis, value, params, m


@dataclass(frozen=True)
class ExperimentResult:
    sweep_param: object
    sweep_value: object
    params: ModelParams
    m: int
    trials: int
    successes: int
    empirical_prob: float
    ci_low: float
    ci_high: float
    alpha: object
    predicted_limit: object
    critical_value: object
    critical_feasible: object
    seed: int
    event: str
    wall_time: float


@dataclass(frozen=True)
class DegreeLawRow:
    h: int
    poisson_mean: float
    empirical_mean: float
    total_variation: float
    chi_square: object
    p_value: object


@dataclass(frozen=True)
class DegreeLawReport:
    params: ModelParams
    trials: int
    t: float
    rows: tuple
    regime_flags: tuple
    guard: object = None


@dataclass(frozen=True)
class DominanceReport:
    params: ModelParams
    k: int
    trials: int
    z: float
    model_prob: float
    er_prob: float
    difference: float
    allowance: float
    holds: bool


@dataclass(frozen=True)
class GapReport:
    params: ModelParams
    k: int
    trials: int
    events: int
    frequency: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class CouplingReport:
    n: int
    K: int
    P: int
    d: int
    x: float
    admissible: bool
    trials: int
    valid_trials: int
    rate: float
    ci_low: float
    ci_high: float
    containment_failures: int
    oracle_rate: float


@dataclass(frozen=True)
class PoissonizationReport:
    n: int
    P: int
    x: float
    d: int
    k: int
    trials: int
    rho: float
    binomial_prob: float
    multiset_prob: float
    er_prob: float
    allowance: float
    holds: bool
    half_count_mean: float
    half_count_expected: float
    edge_frequency: float
    edge_prob_exact: float
    edge_prob_asymptotic: float
    edge_z: object
    edge_check: object


class SerialPool:
    """
    In-process stand-in for multiprocessing.Pool when one worker is requested.
    """
    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        pass

    # noinspection PyMethodMayBeStatic
    def imap(self, func, iterable, chunksize=1):
        return map(func, iterable)


class TrialRunner:
    def __init__(self, workers=None):
        """Number of worker processes; 1 evaluates trials in-process."""
        self.workers = workers if workers is not None else worker_count()
        """Number of trials per info log."""
        self.TRIALS_PER_LOG = 250
        """Number of trials handed to a worker at once."""
        self.CHUNK_SIZE = 8

    def pool(self):
        """
        Helper method that facilitates IoC.
        """
        if self.workers <= 1:
            return SerialPool()
        return Pool(processes=self.workers)

    def run(self, trial, trials, label='trials'):
        """
        Outcomes of trial(0), ..., trial(trials - 1), ordered by trial index.
        """
        outcomes = []
        with self.pool() as pool:
            for outcome in pool.imap(trial, range(trials), self.CHUNK_SIZE):
                outcomes.append(outcome)
                if len(outcomes) % self.TRIALS_PER_LOG == 0:
                    logging.info(f'{label}: {len(outcomes)}/{trials} trials')
        return outcomes


def model_trial(params, m, base_seed, event, trial_index):
    graph = gen_model_graph(params, trial_stream(base_seed, trial_index))
    if event == 'min_degree':
        return min_degree_at_least(graph, m + 1)
    if event == 'sampled_failures':
        victims_rng = trial_stream(base_seed, trial_index, lane=1)
        return survives_sampled_failures(graph, m, SAMPLED_FAILURE_SUBSETS, victims_rng)
    return survives_node_failures(graph, m)


def _run_point(runner, cfg, axis, value, params, m):
    started = time.perf_counter()
    outcomes = runner.run(partial(model_trial, params, m, cfg.base_seed, cfg.event), cfg.trials,
                          label=f'{axis}={value}' if axis else 'simulate')
    successes = int(sum(outcomes))
    ci_low, ci_high = wilson_interval(successes, cfg.trials)
    alpha = alpha_from_params(params, m) if params.n >= 3 else None
    critical = solve_critical(axis, params, m) if axis is not None and params.n >= 3 else None
    return ExperimentResult(
        sweep_param=axis, sweep_value=value, params=params, m=m,
        trials=cfg.trials, successes=successes, empirical_prob=successes / cfg.trials,
        ci_low=ci_low, ci_high=ci_high, alpha=alpha,
        predicted_limit=predicted_limit_prob(alpha, m) if alpha is not None else None,
        critical_value=critical.value if critical else None,
        critical_feasible=critical.feasible if critical else None,
        seed=cfg.base_seed, event=cfg.event, wall_time=time.perf_counter() - started)


def run_resilience_trials(cfg, runner=None):
    """
    Fraction of cfg.trials sampled graphs that stay connected after any m node failures.
    """
    runner = runner or TrialRunner()
    for regime in check_regime(cfg.params):
        if not regime.passed:
            logging.warning(f'Regime advisory {regime.name}: {regime.proxy:.6g} vs {regime.threshold:.6g}')
    return _run_point(runner, cfg, None, None, cfg.params, cfg.m)


def run_min_degree_trials(cfg, runner=None):
    """
    Same protocol, counting graphs with minimum degree at least m + 1.
    """
    return run_resilience_trials(ExperimentConfig(cfg.params, cfg.m, cfg.trials, cfg.base_seed, event='min_degree'),
                                 runner)


def sweep_experiment(cfg, runner=None):
    """
    One ExperimentResult per sweep value; every point reuses the same trial streams.
    """
    if cfg.sweep is None:
        raise ValueError('sweep_experiment needs a config with a sweep')
    runner = runner or TrialRunner()
    results = []
    for axis, value, params, m in cfg.points():
        result = _run_point(runner, cfg, axis, value, params, m)
        logging.info(f'Sweep point {axis}={value}: {result.successes}/{result.trials}')
        results.append(result)
    return results


def degree_trial(params, base_seed, trial_index):
    histogram = degree_histogram(gen_model_graph(params, trial_stream(base_seed, trial_index)))
    return tuple(histogram.count(h) for h in DEGREE_LAW_DEGREES)


def _poisson_grid(samples, lam):
    upper = max(int(samples.max()), int(lam + 12.0 * math.sqrt(lam) + 20.0))
    grid = np.arange(upper + 1)
    return grid, poisson.pmf(grid, lam)


def total_variation(samples, lam):
    """
    Total-variation distance between the empirical law of `samples` and Poisson(lam).
    """
    samples = np.asarray(samples, dtype=np.int64)
    grid, pmf = _poisson_grid(samples, lam)
    empirical = np.bincount(samples, minlength=len(grid)) / len(samples)
    return 0.5 * (float(np.abs(empirical - pmf).sum()) + max(0.0, 1.0 - float(pmf.sum())))


def poisson_chi_square(samples, lam, min_expected=5.0):
    """
    Chi-square goodness of fit against Poisson(lam); bins with expected count below
    min_expected are pooled together with the tail. Returns (None, None) with fewer than two bins.
    """
    samples = np.asarray(samples, dtype=np.int64)
    grid, pmf = _poisson_grid(samples, lam)
    observed = np.bincount(samples, minlength=len(grid)).astype(float)
    expected = pmf * len(samples)
    large = expected >= min_expected
    pooled_expected = expected[~large].sum() + len(samples) * max(0.0, 1.0 - float(pmf.sum()))
    observed = np.concatenate((observed[large], [observed[~large].sum()]))
    expected = np.concatenate((expected[large], [pooled_expected]))
    if pooled_expected == 0.0 and observed[-1] == 0.0:
        observed, expected = observed[:-1], expected[:-1]
    if len(expected) < 2:
        return None, None
    expected *= observed.sum() / expected.sum()
    result = chisquare(observed, f_exp=expected)
    return float(result.statistic), float(result.pvalue)


def degree_law_test(params, trials, base_seed=0, runner=None):
    """
    Compare the count of degree-h nodes (h = 0..3) over trials with Poisson(lambda_{n,h}).
    """
    runner = runner or TrialRunner()
    t = float(edge_prob_model(params))
    flags = tuple(r.name for r in check_regime(params) if not r.passed)
    guard = None
    scale = params.n * t / math.log(params.n)
    if not 0.5 <= scale <= 2.0:
        guard = f'edge probability t={t:.6g} is far from ln n / n; the Poisson approximation is not expected to hold'
        logging.warning(guard)
    counts = np.array(runner.run(partial(degree_trial, params, base_seed), trials, label='degree law'))
    rows = []
    for column, h in enumerate(DEGREE_LAW_DEGREES):
        samples = counts[:, column]
        lam = poisson_degree_mean(params.n, t, h)
        chi2, p_value = poisson_chi_square(samples, lam)
        rows.append(DegreeLawRow(h=h, poisson_mean=lam, empirical_mean=float(samples.mean()),
                                 total_variation=total_variation(samples, lam), chi_square=chi2, p_value=p_value))
    return DegreeLawReport(params=params, trials=trials, t=t, rows=tuple(rows), regime_flags=flags, guard=guard)


def dominance_trial(params, z, k, base_seed, trial_index):
    model = gen_model_graph(params, trial_stream(base_seed, trial_index, lane=0))
    er = gen_er(params.n, z, trial_stream(base_seed, trial_index, lane=1))
    return is_k_connected(model, k), is_k_connected(er, k)


def _half_width(successes, trials):
    low, high = wilson_interval(successes, trials)
    return (high - low) / 2.0


def dominance_test(params, trials, k, base_seed=0, slack=DOMINANCE_SLACK, runner=None):
    """
    P[model k-connected] against P[G(n, z) k-connected] with z = t (1 - slack), paired seeds.

    The inequality is accepted within the sum of both Wilson half-widths.
    """
    runner = runner or TrialRunner()
    z = float(edge_prob_model(params)) * (1.0 - slack)
    outcomes = runner.run(partial(dominance_trial, params, z, k, base_seed), trials, label='dominance')
    model_hits = sum(1 for model_ok, _ in outcomes if model_ok)
    er_hits = sum(1 for _, er_ok in outcomes if er_ok)
    model_prob, er_prob = model_hits / trials, er_hits / trials
    allowance = _half_width(model_hits, trials) + _half_width(er_hits, trials)
    return DominanceReport(params=params, k=k, trials=trials, z=z, model_prob=model_prob, er_prob=er_prob,
                           difference=model_prob - er_prob, allowance=allowance,
                           holds=model_prob >= er_prob - allowance)


def gap_event(graph, k):
    """Minimum degree at least k, yet not k-connected."""
    return min_degree_at_least(graph, k) and not is_k_connected(graph, k)


def gap_trial(params, k, base_seed, trial_index):
    return gap_event(gen_model_graph(params, trial_stream(base_seed, trial_index)), k)


def gap_test(params, trials, k, base_seed=0, runner=None):
    """
    Frequency of graphs whose minimum degree is at least k but which are not k-connected.
    """
    size_guard, k_guard = GAP_COST_GUARD
    if params.n >= size_guard and k > k_guard:
        raise ValueError(f'gap test at n={params.n} is limited to k <= {k_guard}, got k={k}')
    runner = runner or TrialRunner()
    events = sum(1 for hit in runner.run(partial(gap_trial, params, k, base_seed), trials, label='gap') if hit)
    ci_low, ci_high = wilson_interval(events, trials)
    return GapReport(params=params, k=k, trials=trials, events=events, frequency=events / trials,
                     ci_low=ci_low, ci_high=ci_high)


def coupling_trial(n, K, P, d, base_seed, trial_index):
    pair = gen_coupled_pair(n, K, P, d, trial_stream(base_seed, trial_index))
    return pair.coupling_valid, pair.h.edges <= pair.g.edges


def coupling_validity_oracle(n, K, P, x):
    """
    Exact probability that all n Binomial(P, x) ring sizes are at most K.
    """
    return float(binom.cdf(K, P, x)) ** n


def coupling_validity_rate(n, K, P, d, trials, base_seed=0, runner=None):
    """
    Fraction of coupled samples in which every binomial ring fits in K objects, with
    the edge containment H within G checked on each of those samples.
    """
    threshold = coupling_threshold_x(K, P, n)
    runner = runner or TrialRunner()
    outcomes = runner.run(partial(coupling_trial, n, K, P, d, base_seed), trials, label='coupling')
    valid = sum(1 for ok, _ in outcomes if ok)
    failures = sum(1 for ok, contained in outcomes if ok and not contained)
    if failures:
        logging.error(f'Edge containment failed on {failures} valid coupled samples')
    ci_low, ci_high = wilson_interval(valid, trials)
    return CouplingReport(n=n, K=K, P=P, d=d, x=threshold.x, admissible=threshold.admissible,
                          trials=trials, valid_trials=valid, rate=valid / trials, ci_low=ci_low, ci_high=ci_high,
                          containment_failures=failures,
                          oracle_rate=coupling_validity_oracle(n, K, P, threshold.x))


def poissonization_trial(n, P, x, d, k, rho, base_seed, trial_index):
    rings = gen_object_rings_binomial(n, x, P, trial_stream(base_seed, trial_index, lane=0))
    binomial = graph_from_rings(rings, d)
    half_total = half_count_summary(rings).total
    multiset = gen_multiset_graph(n, half_total, d, trial_stream(base_seed, trial_index, lane=1))
    er = gen_er(n, rho, trial_stream(base_seed, trial_index, lane=2))
    return (is_k_connected(binomial, k), is_k_connected(multiset, k), is_k_connected(er, k),
            binomial.edge_count, half_total)


def poissonization_test(n, P, x, d, trials, k=1, base_seed=0, runner=None):
    """
    Chain H_d(n, x, P) >= multiset graph on the half-counts >= G(n, rho), checked on k-connectivity.

    Also compares the edge frequency of H_d(n, x, P) with (P x^2)^d / d!, within 3 sigma
    of the pair count when P x^2 <= EDGE_CHECK_REGIME, and the mean half-count total with
    its expectation.
    """
    if k < 1:
        raise ValueError(f'k must be at least 1, got {k}')
    terms = poissonization_terms(n, P, x, d)
    runner = runner or TrialRunner()
    outcomes = runner.run(partial(poissonization_trial, n, P, x, d, k, terms.rho, base_seed), trials,
                          label='poissonization')
    binomial_hits = sum(1 for outcome in outcomes if outcome[0])
    multiset_hits = sum(1 for outcome in outcomes if outcome[1])
    er_hits = sum(1 for outcome in outcomes if outcome[2])
    allowance = _half_width(binomial_hits, trials) + _half_width(er_hits, trials)
    binomial_prob, er_prob = binomial_hits / trials, er_hits / trials

    pair_draws = trials * math.comb(n, 2)
    edge_frequency = sum(outcome[3] for outcome in outcomes) / pair_draws
    exact = float(binom.sf(d - 1, P, x * x))
    asymptotic = (P * x * x) ** d / math.factorial(d)
    sigma = math.sqrt(exact * (1.0 - exact) / pair_draws)
    edge_z = (edge_frequency - asymptotic) / sigma if sigma > 0 else None
    edge_check = None
    if P * x * x <= EDGE_CHECK_REGIME and edge_z is not None:
        edge_check = abs(edge_z) <= 3.0
        if not edge_check:
            logging.warning(f'Edge frequency {edge_frequency:.6g} is {edge_z:.2f} sigma from {asymptotic:.6g}')
    return PoissonizationReport(
        n=n, P=P, x=x, d=d, k=k, trials=trials, rho=terms.rho,
        binomial_prob=binomial_prob, multiset_prob=multiset_hits / trials, er_prob=er_prob,
        allowance=allowance, holds=binomial_prob >= er_prob - allowance,
        half_count_mean=sum(outcome[4] for outcome in outcomes) / trials,
        half_count_expected=terms.expected_total,
        edge_frequency=edge_frequency, edge_prob_exact=exact, edge_prob_asymptotic=asymptotic,
        edge_z=edge_z, edge_check=edge_check)
