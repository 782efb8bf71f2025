"""
Exact and asymptotic edge probabilities of the interest-based social graph,
the resilience scaling law and its limit probabilities, the Poisson law of
degree counts, finite-n regime advisories and critical-parameter solvers.

Everything here is a pure function of its arguments.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from scipy.stats import binomtest, poisson

# finite-n stand-ins for the asymptotic conditions on K and P
REGIME_THRESHOLDS = {
    'ring_overlap': 0.1,         # K^2 ln n / P
    'pool_density': 0.1,         # K n ln n / P
    'ring_growth_exponent': 0.1,  # K >= n^exponent
}

CRITICAL_AXES = ('g', 'n', 'm', 'K', 'P', 'f')

# upper end of the doubling searches for n* and P*
_SEARCH_CEILING = 2 ** 60


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of G_d(n, K, P) intersected with G(n, f) and G(n, g).
    """
    n: int
    K: int
    P: int
    d: int
    f: float = 1.0
    g: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f'n must be at least 2, got {self.n}')
        if self.K < 1:
            raise ValueError(f'K must be at least 1, got {self.K}')
        if self.K > self.P:
            raise ValueError(f'K exceeds P ({self.K} > {self.P})')
        if not 1 <= self.d <= self.K:
            raise ValueError(f'd must satisfy 1 <= d <= K, got d={self.d}, K={self.K}')
        for name in ('f', 'g'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f'{name} must lie in [0, 1], got {value}')

    @property
    def p(self):
        """Probability that a pair is both friends and has a surviving link."""
        return self.f * self.g

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RegimeReport:
    name: str
    proxy: float
    threshold: float
    passed: bool
    description: str


@dataclass(frozen=True)
class ScalingDiagnostics:
    s: float
    t: float
    alpha: float
    m: int
    predicted_limit: float
    regime_flags: tuple = ()


@dataclass(frozen=True)
class CriticalValue:
    """
    Boundary value of one parameter for the scaling-law inequality.

    value is None for integer axes where no value in the domain qualifies.
    """
    axis: str
    value: object
    feasible: bool
    boundary: bool = False
    alpha: object = None


def _check_overlap_args(K, P, d):
    if not 1 <= d <= K:
        raise ValueError(f'd must satisfy 1 <= d <= K, got d={d}, K={K}')
    if K > P:
        raise ValueError(f'K exceeds P ({K} > {P})')


@lru_cache(maxsize=4096)
def edge_prob_overlap(K, P, d):
    """
    Probability that two uniform K-subsets of a P-pool share at least d objects,
    as an exact Fraction (hypergeometric upper tail).
    """
    _check_overlap_args(K, P, d)
    favorable = sum(math.comb(K, u) * math.comb(P - K, K - u) for u in range(max(d, 2 * K - P), K + 1))
    return Fraction(favorable, math.comb(P, K))


def edge_prob_model(params):
    """
    Exact edge probability t = f * g * s of the full model, as a Fraction.
    """
    return Fraction(params.f) * Fraction(params.g) * edge_prob_overlap(params.K, params.P, params.d)


def approx_edge_prob_overlap(K, P, d):
    if K < 1 or P < 1 or d < 1:
        raise ValueError(f'K, P and d must be positive, got K={K}, P={P}, d={d}')
    return min(1.0, (K * K / P) ** d / math.factorial(d))


def scaling_threshold(n, m):
    """(ln n + m ln ln n) / n."""
    _check_scaling_n(n)
    return (math.log(n) + m * math.log(math.log(n))) / n


def _check_scaling_n(n):
    if n < 3:
        raise ValueError(f'the scaling law needs n >= 3 so that ln ln n > 0, got n={n}')


def _check_budget(m):
    if m < 0:
        raise ValueError(f'failure budget m must be non-negative, got {m}')


def alpha_from_params(params, m):
    """
    Deviation alpha in n t = ln n + m ln ln n + alpha.
    """
    _check_scaling_n(params.n)
    _check_budget(m)
    n = params.n
    return n * float(edge_prob_model(params)) - math.log(n) - m * math.log(math.log(n))


def predicted_limit_prob(alpha, m):
    """
    Limit probability exp(-exp(-alpha) / m!) of staying connected after any m node failures.
    """
    _check_budget(m)
    if alpha == math.inf:
        return 1.0
    if alpha == -math.inf:
        return 0.0
    exponent = -alpha - math.lgamma(m + 1)
    if exponent > 700.0:
        return 0.0
    return math.exp(-math.exp(exponent))


def er_kconn_limit(alpha, k):
    """
    Limit probability that G(n, z) is k-connected when n z = ln n + (k-1) ln ln n + alpha.
    """
    if k < 1:
        raise ValueError(f'k must be at least 1, got {k}')
    return predicted_limit_prob(alpha, k - 1)


def check_regime(params):
    """
    Advisory finite-n checks of the asymptotic conditions on K and P.
    """
    n, K, P = params.n, params.K, params.P
    log_n = math.log(n)
    exponent = REGIME_THRESHOLDS['ring_growth_exponent']
    return [
        RegimeReport(
            name='ring_overlap',
            proxy=K * K * log_n / P,
            threshold=REGIME_THRESHOLDS['ring_overlap'],
            passed=K * K * log_n / P <= REGIME_THRESHOLDS['ring_overlap'],
            description='K^2/P = o(1/ln n), checked as K^2 ln n / P'),
        RegimeReport(
            name='pool_density',
            proxy=K * n * log_n / P,
            threshold=REGIME_THRESHOLDS['pool_density'],
            passed=K * n * log_n / P <= REGIME_THRESHOLDS['pool_density'],
            description='K/P = o(1/(n ln n)), checked as K n ln n / P'),
        RegimeReport(
            name='ring_growth',
            proxy=float(K),
            threshold=n ** exponent,
            passed=K >= n ** exponent,
            description=f'K = Omega(n^c), checked as K >= n^{exponent}'),
    ]


def scaling_diagnostics(params, m):
    s = edge_prob_overlap(params.K, params.P, params.d)
    t = edge_prob_model(params)
    alpha = alpha_from_params(params, m)
    flags = tuple(report.name for report in check_regime(params) if not report.passed)
    return ScalingDiagnostics(
        s=float(s), t=float(t), alpha=alpha, m=m,
        predicted_limit=predicted_limit_prob(alpha, m), regime_flags=flags)


def poisson_pmf(lam, ell):
    """
    lam^ell e^-lam / ell!.
    """
    if lam < 0 or ell < 0:
        raise ValueError(f'Poisson pmf needs lam >= 0 and ell >= 0, got lam={lam}, ell={ell}')
    return float(poisson.pmf(ell, lam))


def poisson_degree_mean(n, t, h):
    """
    Mean n (n t)^h e^(-n t) / h! of the number of degree-h nodes.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f't must lie in [0, 1], got {t}')
    return n * poisson_pmf(n * t, h)


def wilson_interval(successes, trials, confidence=0.95):
    """
    Wilson score interval for a binomial proportion, clipped so that it contains the point estimate.
    """
    if trials < 1:
        raise ValueError(f'trials must be positive, got {trials}')
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method='wilson')
    estimate = successes / trials
    return min(max(ci.low, 0.0), estimate), max(min(ci.high, 1.0), estimate)


def solve_critical(param_name, params, m):
    """
    Critical value of one axis for f g s(K, P, d) >= (ln n + m ln ln n) / n.

    f and g are solved by division (the equality case); n and K are the minimal
    integers satisfying the inequality, P and m the maximal ones.
    """
    _check_budget(m)
    solvers = {
        'g': _critical_probability, 'f': _critical_probability,
        'n': _critical_n, 'm': _critical_m, 'K': _critical_k, 'P': _critical_p,
    }
    if param_name not in solvers:
        raise ValueError(f'unknown critical axis {param_name!r}; expected one of {", ".join(CRITICAL_AXES)}')
    _check_scaling_n(params.n)
    result = solvers[param_name](param_name, params, m)
    if not result.feasible:
        logging.warning(f'No feasible critical {param_name} for {params}, m={m}: unclamped value {result.value}')
    return result


def _holds(params, m):
    return float(edge_prob_model(params)) >= scaling_threshold(params.n, m)


def _on_boundary(params, m):
    target = scaling_threshold(params.n, m)
    return math.isclose(float(edge_prob_model(params)), target, rel_tol=1e-12)


def _critical_probability(axis, params, m):
    other = params.g if axis == 'f' else params.f
    denominator = other * float(edge_prob_overlap(params.K, params.P, params.d))
    if denominator == 0.0:
        return CriticalValue(axis, math.inf, feasible=False)
    value = scaling_threshold(params.n, m) / denominator
    if 1.0 < value <= 1.0 + 1e-12:
        value = 1.0
    if value > 1.0:
        return CriticalValue(axis, value, feasible=False)
    solved = params.replace(**{axis: value})
    return CriticalValue(axis, value, feasible=True, boundary=True, alpha=alpha_from_params(solved, m))


def _critical_m(axis, params, m):
    n = params.n
    excess = n * float(edge_prob_model(params)) - math.log(n)
    value = math.floor(excess / math.log(math.log(n)))
    # floor of a rounded quotient can be off by one either way
    while value >= 0 and not _holds(params, value):
        value -= 1
    while _holds(params, value + 1):
        value += 1
    if value < 0:
        return CriticalValue(axis, value, feasible=False)
    return CriticalValue(axis, value, feasible=True, boundary=_on_boundary(params, value),
                         alpha=alpha_from_params(params, value))


def _critical_n(axis, params, m):
    c = float(edge_prob_model(params))
    if c <= 0.0:
        return CriticalValue(axis, None, feasible=False)
    # (ln n + m ln ln n) / n is decreasing from n = 6 on; scan the small range first
    for n in range(3, 17):
        if c >= scaling_threshold(n, m):
            return _integer_result(axis, params.replace(n=n), m)
    lo, hi = 16, 32
    while c < scaling_threshold(hi, m):
        lo, hi = hi, hi * 2
        if hi > _SEARCH_CEILING:
            return CriticalValue(axis, None, feasible=False)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if c >= scaling_threshold(mid, m):
            hi = mid
        else:
            lo = mid
    return _integer_result(axis, params.replace(n=hi), m)


def _critical_k(axis, params, m):
    if not _holds(params.replace(K=params.P), m):
        return CriticalValue(axis, None, feasible=False)
    if _holds(params.replace(K=params.d), m):
        return _integer_result(axis, params.replace(K=params.d), m)
    lo, hi = params.d, params.P
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _holds(params.replace(K=mid), m):
            hi = mid
        else:
            lo = mid
    return _integer_result(axis, params.replace(K=hi), m)


def _critical_p(axis, params, m):
    if not _holds(params.replace(P=params.K), m):
        return CriticalValue(axis, None, feasible=False)
    lo, hi = params.K, 2 * params.K
    while _holds(params.replace(P=hi), m):
        lo, hi = hi, hi * 2
        if hi > _SEARCH_CEILING:
            return CriticalValue(axis, math.inf, feasible=False)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _holds(params.replace(P=mid), m):
            lo = mid
        else:
            hi = mid
    return _integer_result(axis, params.replace(P=lo), m)


def _integer_result(axis, solved, m):
    return CriticalValue(axis, getattr(solved, axis), feasible=True,
                         boundary=_on_boundary(solved, m), alpha=alpha_from_params(solved, m))
