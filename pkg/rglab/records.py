"""
Map experiment results and verification reports into the flat CSV rows and
JSON documents written by output.py.
"""
import dataclasses
import math

import numpy as np

# frozen: downstream plot scripts read columns by position
CSV_COLUMNS = [
    'sweep_param', 'sweep_value', 'n', 'K', 'P', 'd', 'f', 'g', 'm', 'trials', 'successes',
    'empirical_prob', 'ci_low', 'ci_high', 'alpha', 'predicted_limit', 'critical_value', 'seed',
]

RATIONAL_DIGITS = 64


def to_flag(flag):
    return '1' if flag else '0'


def format_number(value):
    """
    Text form used in every output: 9 significant digits for floats, '' for missing values.
    """
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return to_flag(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return f'{value:.9g}'
    return str(value)


def format_rational(fraction):
    """
    'p/q' when both fit in RATIONAL_DIGITS decimal digits, else None.
    """
    numerator, denominator = str(fraction.numerator), str(fraction.denominator)
    if len(numerator.lstrip('-')) > RATIONAL_DIGITS or len(denominator) > RATIONAL_DIGITS:
        return None
    return numerator if denominator == '1' else f'{numerator}/{denominator}'


def result_to_row(result):
    """
    One CSV row (column -> text) for an ExperimentResult.
    """
    params = result.params
    mapped_data = dict()

    mapped_data['sweep_param'] = result.sweep_param or ''
    mapped_data['sweep_value'] = format_number(result.sweep_value)
    mapped_data['n'] = format_number(params.n)
    mapped_data['K'] = format_number(params.K)
    mapped_data['P'] = format_number(params.P)
    mapped_data['d'] = format_number(params.d)
    mapped_data['f'] = format_number(float(params.f))
    mapped_data['g'] = format_number(float(params.g))
    mapped_data['m'] = format_number(result.m)
    mapped_data['trials'] = format_number(result.trials)
    mapped_data['successes'] = format_number(result.successes)
    mapped_data['empirical_prob'] = format_number(result.empirical_prob)
    mapped_data['ci_low'] = format_number(result.ci_low)
    mapped_data['ci_high'] = format_number(result.ci_high)
    mapped_data['alpha'] = format_number(result.alpha)
    mapped_data['predicted_limit'] = format_number(result.predicted_limit)
    mapped_data['critical_value'] = format_number(result.critical_value)
    mapped_data['seed'] = format_number(result.seed)

    return mapped_data


def jsonable(value):
    """
    Recursively convert dataclasses, numpy values and non-finite floats into plain JSON types.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else format_number(value)
    return value


def result_to_json(result):
    """
    Every ExperimentResult field, parameters expanded in place.
    """
    mapped_data = jsonable(result)
    mapped_data.update(mapped_data.pop('params'))
    return mapped_data
