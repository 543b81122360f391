# -*- coding: utf-8 -*-
"""
Run configuration of the command line front end.

Options come from (defaults, config file, command line flags) with increasing
priority. Config files are JSON (``.json``) or TOML (``.toml``).
"""
from __future__ import (absolute_import, division, print_function)

import json
import os
import sys

from .util import ValidationError, default_n_jobs, merge_dicts

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValidationError):

    def __init__(self, msg, key=None):
        super(ConfigError, self).__init__(msg)
        self.key = key


def _choice(*options):
    def check(key, value):
        if value not in options:
            raise ConfigError("%s must be one of %s (got %r)" % (key, ', '.join(options), value), key)
        return value
    return check


def _int(minimum=None):
    def check(key, value):
        if isinstance(value, bool) or not isinstance(value, int):
            try:
                if float(value) != int(value):
                    raise ValueError
                value = int(value)
            except (TypeError, ValueError):
                raise ConfigError("%s must be an integer (got %r)" % (key, value), key)
        if minimum is not None and value < minimum:
            raise ConfigError("%s must be >= %d" % (key, minimum), key)
        return value
    return check


def _float(key, value):
    if isinstance(value, bool):
        raise ConfigError("%s must be a number" % key, key)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError("%s must be a number (got %r)" % (key, value), key)


def _str(key, value):
    if not isinstance(value, str):
        raise ConfigError("%s must be a string" % key, key)
    return value


def _bool(key, value):
    if not isinstance(value, bool):
        raise ConfigError("%s must be true or false" % key, key)
    return value


def _str_list(key, value):
    if isinstance(value, str):
        value = [v.strip() for v in value.split(',') if v.strip()]
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        raise ConfigError("%s must be a list of strings" % key, key)
    return list(value)


def _float_list(key, value):
    if isinstance(value, str):
        value = value.split(',')
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("%s must be a non-empty list of numbers" % key, key)
    return [_float(key, v) for v in value]


def _levels(key, value):
    if not isinstance(value, dict) or not all(isinstance(v, list) for v in value.values()):
        raise ConfigError("%s must map column names to lists of labels" % key, key)
    return value


def _design(key, value):
    if not isinstance(value, (str, dict)):
        raise ConfigError("%s must be a preset name, a file path or a table" % key, key)
    return value


BENCHMARKS = ('validate-estep', 'angle-comparison', 'choose-d', 'variable-selection', 'robustness',
              'ses-proxy')

CHECKS = {
    'input': _str, 'output': _str, 'model': _str, 'report': _str, 'response': _str,
    'predictors': _str_list,
    'response_kind': _choice('continuous', 'categorical'),
    'levels': _levels,
    'basis': _choice('polynomial', 'slices'),
    'degree': _int(1), 'slices': _int(2), 'd': _int(0),
    'backend': _choice('approximate', 'exact'),
    'tol': _float, 'max_iter': _int(1), 'seed': _int(0), 'threads': _int(-1),
    'lambda': _float, 'lambda_grid': _float_list,
    'select': _choice('aic', 'bic', 'cv'),
    'method': _choice('perm', 'cv', 'aic', 'bic'),
    'B': _int(1), 'level': _float, 'folds': _int(2), 'reduction_slices': _int(2),
    'ses_index': _bool, 'design': _design, 'reps': _int(1),
    'benchmark': _choice(*BENCHMARKS),
    'n': _int(4), 'p': _int(1), 'rho': _float, 'budget': _int(16), 'memory_budget': _int(0),
    'timing': _bool,
}

_data_keys = ('input', 'response', 'predictors', 'response_kind', 'levels')
_fit_keys = ('basis', 'degree', 'slices', 'backend', 'tol', 'max_iter', 'budget')
_run_keys = ('seed', 'threads')

COMMAND_KEYS = {
    'fit': _data_keys + _fit_keys + _run_keys + (
        'model', 'report', 'd', 'lambda', 'lambda_grid', 'select', 'folds', 'reduction_slices',
        'timing'),
    'reduce': _run_keys + ('model', 'input', 'output', 'ses_index', 'budget', 'memory_budget'),
    'select-dim': _data_keys + _fit_keys + _run_keys + ('output', 'method', 'B', 'level', 'folds'),
    'simulate': _fit_keys + _run_keys + ('design', 'reps', 'output', 'd', 'lambda', 'timing'),
    'benchmark': _run_keys + ('benchmark', 'reps', 'output', 'n', 'p', 'rho', 'B', 'folds', 'budget',
                              'timing'),
    'ses-index': _run_keys + ('model', 'input', 'output', 'budget'),
}

REQUIRED = {
    'fit': ('input', 'response', 'd'),
    'reduce': ('model', 'input'),
    'select-dim': ('input', 'response'),
    'simulate': ('design',),
    'benchmark': ('benchmark',),
    'ses-index': ('model', 'input'),
}


def defaults(command):
    """ Default options of a command (``ORDRED_SEED``/``ORDRED_BACKEND`` honoured) """
    base = {
        'seed': int(os.environ.get('ORDRED_SEED', 0)),
        'threads': default_n_jobs(),
        'backend': os.environ.get('ORDRED_BACKEND', 'approximate'),
        'tol': 1e-6, 'max_iter': 200, 'basis': 'polynomial', 'degree': 2,
        'reduction_slices': 10, 'timing': True, 'folds': 10, 'B': 500, 'level': 0.01,
        'reps': 10, 'memory_budget': 2**30, 'ses_index': False, 'method': 'perm',
        'model': 'model.json', 'report': 'fit-report.json',
    }
    if command == 'simulate':
        # the design's r fixes the basis
        del base['basis'], base['degree']
    if command in ('reduce', 'ses-index') and 'ORDRED_SEED' not in os.environ:
        # unset: the stored model's seed
        del base['seed']
    return {k: v for k, v in base.items() if k in COMMAND_KEYS[command]}


def load_config(path):
    """ Parse a JSON or TOML config file into a dict """
    ext = os.path.splitext(path)[1].lower()
    try:
        if ext == '.toml':
            with open(path, 'rb') as fh:
                return tomllib.load(fh)
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as e:
        raise ConfigError("Could not read config file %s: %s" % (path, e))
    if not isinstance(doc, dict):
        raise ConfigError("Config file %s must hold a table/object" % path)
    return doc


class RunConfig(object):
    """ Validated options of one command

    Examples
    --------
    >>> cfg = RunConfig.build('benchmark', flags={'benchmark': 'validate-estep', 'reps': 3})
    >>> cfg.reps, cfg.benchmark
    (3, 'validate-estep')

    """

    def __init__(self, command, options):
        if command not in COMMAND_KEYS:
            raise ConfigError("Unknown command: %s" % command)
        allowed = COMMAND_KEYS[command]
        checked = {}
        for key, value in options.items():
            if key not in allowed:
                raise ConfigError("Unknown option for %s: %s" % (command, key), key)
            checked[key] = CHECKS[key](key, value)
        for key in REQUIRED[command]:
            if checked.get(key) is None:
                raise ConfigError("Missing required option: %s" % key, key)
        if 'level' in checked and not 0 < checked['level'] < 1:
            raise ConfigError("level must lie in (0, 1)", 'level')
        if 'tol' in checked and not checked['tol'] > 0:
            raise ConfigError("tol must be positive", 'tol')
        if checked.get('lambda') is not None and checked['lambda'] < 0:
            raise ConfigError("lambda must be non-negative", 'lambda')
        self.command = command
        self.options = checked

    @classmethod
    def build(cls, command, path=None, flags=None):
        """ Merge defaults, an optional config file and flags (``None`` flags ignored) """
        from_file = load_config(path) if path else {}
        given = {k: v for k, v in (flags or {}).items() if v is not None}
        return cls(command, merge_dicts(defaults(command), from_file, given))

    def __getattr__(self, key):
        if key in ('command', 'options'):
            raise AttributeError(key)
        if key not in COMMAND_KEYS[self.command]:
            raise AttributeError(key)
        return self.options.get(key)

    def get(self, key, default=None):
        value = self.options.get(key)
        return default if value is None else value

    def to_dict(self):
        return dict(self.options)
