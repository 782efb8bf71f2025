"""
Environment settings and experiment configuration files.

A configuration file is flat `key = value` lines with an optional [sweep]
section naming one axis and its values:

    n = 1000
    K = 36
    P = 10000
    d = 2
    f = 1
    g = 0.95
    trials = 500
    seed = 7

    [sweep]
    axis = g
    start = 0.5
    stop = 1.0
    step = 0.05
"""
import configparser
import logging
import os
import re
from decimal import Decimal, InvalidOperation

from .theory import CRITICAL_AXES, ModelParams


class ConfigError(ValueError):
    """Invalid configuration, carrying the offending line and field when known."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f'line {line}')
        if field is not None:
            where.append(f'field {field!r}')
        super().__init__(f'{", ".join(where)}: {message}' if where else message)


def mapping_factory(mapping):
    def map_func(key):
        return mapping.get(key) if key is not None else None
    return map_func


FIELD_TYPES = {
    'n': int, 'K': int, 'P': int, 'd': int, 'm': int,
    'f': float, 'g': float,
    'trials': int, 'seed': int, 'event': str,
}
field_type = mapping_factory(FIELD_TYPES)

DEFAULTS = {'f': 1.0, 'g': 1.0, 'm': 0, 'trials': 1000, 'seed': 0, 'event': 'resilience'}
REQUIRED = ('n', 'K', 'P', 'd')

_MAIN = 'experiment'


def worker_count():
    """
    Worker processes for trial batches: RG_LAB_THREADS, else the logical core count.
    """
    raw = os.getenv('RG_LAB_THREADS')
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        logging.warning(f'Ignoring RG_LAB_THREADS={raw!r}; expected an integer')
        return os.cpu_count() or 1


def log_level():
    return os.getenv('RG_LAB_LOG_LEVEL', 'INFO').upper()


def _locate(text, section, key):
    """1-based line of `key` inside `section` of the user's text."""
    current = _MAIN
    pattern = re.compile(rf'^\s*{re.escape(key)}\s*[=:]')
    for number, line in enumerate(text.splitlines(), start=1):
        header = re.match(r'^\s*\[([^\]]+)\]', line)
        if header:
            current = header.group(1).strip()
        elif current == section and pattern.match(line):
            return number
    return None


def _cast(text, section, key, raw, caster):
    try:
        return caster(raw.strip())
    except ValueError as err:
        raise ConfigError(f'cannot read {raw!r} as {caster.__name__}', _locate(text, section, key), key) from err


def _sweep_values(text, section, axis):
    caster = field_type(axis)
    if 'values' in section:
        tokens = [token for token in section['values'].split(',') if token.strip()]
        if not tokens:
            raise ConfigError('sweep needs at least one value', _locate(text, 'sweep', 'values'), 'values')
        return tuple(_cast(text, 'sweep', 'values', token, caster) for token in tokens)
    try:
        start, stop, step = (Decimal(section[key].strip()) for key in ('start', 'stop', 'step'))
    except KeyError as err:
        raise ConfigError('sweep needs `values` or all of `start`, `stop`, `step`', field=err.args[0]) from err
    except InvalidOperation as err:
        raise ConfigError('start, stop and step must be numbers', _locate(text, 'sweep', 'start'), 'start') from err
    if step <= 0:
        raise ConfigError('step must be positive', _locate(text, 'sweep', 'step'), 'step')
    if caster is int:
        for key, bound in (('start', start), ('stop', stop), ('step', step)):
            if bound != bound.to_integral_value():
                raise ConfigError(f'{axis} sweeps need whole numbers, got {key} = {bound}',
                                  _locate(text, 'sweep', key), key)
    values = []
    value = start
    while value <= stop:
        values.append(caster(value) if caster is int else float(value))
        value += step
    return tuple(values)


def parse_config(text):
    """
    Parse configuration text into an ExperimentConfig.
    """
    # imported here: experiments imports this module for worker_count()
    from .experiments import ExperimentConfig

    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(f'[{_MAIN}]\n{text}')
    except configparser.Error as err:
        line = getattr(err, 'lineno', None)
        if line is None and getattr(err, 'errors', None):
            line = err.errors[0][0]
        raise ConfigError(err.message.splitlines()[0], line - 1 if line else None) from err

    unknown_sections = [s for s in parser.sections() if s not in (_MAIN, 'sweep')]
    if unknown_sections:
        raise ConfigError(f'unknown section [{unknown_sections[0]}]')

    main = parser[_MAIN]
    values = dict(DEFAULTS)
    for key, raw in main.items():
        caster = field_type(key)
        if caster is None:
            raise ConfigError('unknown key', _locate(text, _MAIN, key), key)
        values[key] = _cast(text, _MAIN, key, raw, caster)
    for key in REQUIRED:
        if key not in values:
            raise ConfigError('required key missing', field=key)

    try:
        params = ModelParams(n=values['n'], K=values['K'], P=values['P'], d=values['d'],
                             f=values['f'], g=values['g'])
    except ValueError as err:
        field = str(err).split()[0]
        raise ConfigError(str(err), _locate(text, _MAIN, field), field) from err

    sweep = None
    if parser.has_section('sweep'):
        section = parser['sweep']
        axis = section.get('axis', '').strip()
        if axis not in CRITICAL_AXES:
            raise ConfigError(f'axis must be one of {", ".join(CRITICAL_AXES)}', _locate(text, 'sweep', 'axis'), 'axis')
        sweep = (axis, _sweep_values(text, section, axis))

    try:
        return ExperimentConfig(params=params, m=values['m'], trials=values['trials'],
                                base_seed=values['seed'], sweep=sweep, event=values['event'])
    except ValueError as err:
        field = 'values' if sweep is not None and 'sweep' in str(err) else None
        raise ConfigError(str(err), _locate(text, 'sweep', 'values') if field else None, field) from err


def read_config(path):
    with open(path, encoding='utf-8') as stream:
        return parse_config(stream.read())
