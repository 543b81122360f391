# -*- coding: utf-8 -*-
"""
Command line front end: ``ordred <command> [options]``.

Every command reads its options from (defaults, ``--config`` file, flags),
writes machine readable output (CSV/JSON) and exits with 0 on success, 2 on
invalid input, 3 on numerical failure and 4 on any other error. Errors are
reported as a JSON object on stderr.
"""
from __future__ import (absolute_import, division, print_function)

import argparse
import json
import logging
import math
import os
import sys

import numpy as np
import pandas as pd

from ._release import __version__
from .benchmark import design_basis, run_benchmark, simulate_replicate
from .config import BENCHMARKS, ConfigError, RunConfig, load_config
from .dimension import cv_select, ic_select, permutation_select
from .em import fit
from .model import BasisSpec, UnknownColumn, validate_dataset
from .reduce import DimensionNotOne, LookupTable, Reducer, normalized_index, tabulate
from .regularize import select_lambda
from .results import FittedModel
from .simulate import SimDesign, replicate_seeds, run_replicates
from .util import NumericalError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_INTERNAL = 0, 2, 3, 4

FLOAT_FORMAT = '%.17g'


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError("Not JSON serializable: %r" % type(obj))


def _dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=1, default=_json_default) + '\n'


def _write_text(path, text):
    with open(path, 'w') as fh:
        fh.write(text)


def _write_csv(df, path=None):
    if path is None:
        df.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)
    else:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def _read_table(path):
    try:
        return pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ValidationError("Could not parse %s: %s" % (path, e))


def _read_model(path):
    with open(path) as fh:
        return FittedModel.from_json(fh.read())


def _dataset(cfg):
    table = _read_table(cfg.input)
    schema = {'response': cfg.response}
    for key in ('predictors', 'response_kind', 'levels'):
        if cfg.get(key) is not None:
            schema[key] = cfg.get(key)
    return validate_dataset(table, schema)


def _basis(cfg, data):
    if data.categorical:
        return BasisSpec.slices(cfg.slices)
    if cfg.basis == 'slices':
        return BasisSpec.slices(cfg.get('slices', 10))
    return BasisSpec.polynomial(cfg.degree)


def _fit_kw(cfg):
    kw = {'backend': cfg.backend, 'tol': cfg.tol, 'max_iter': cfg.max_iter}
    if cfg.get('budget') is not None:
        kw['budget'] = cfg.budget
    return kw


def _codes(model, table):
    missing = [name for name in model.names if name not in table.columns]
    if missing:
        raise UnknownColumn("Predictor column %r missing from the input" % missing[0], column=missing[0])
    return model.encode(table[list(model.names)].to_numpy(dtype=object))


def cmd_fit(cfg):
    """ Fit a model, write ``model.json`` and a fit report """
    data = _dataset(cfg)
    spec = _basis(cfg, data)
    kw = _fit_kw(cfg)
    report = {}
    if cfg.lambda_grid is not None or cfg.select is not None:
        res = select_lambda(data, spec, cfg.d, grid=cfg.lambda_grid, criterion=cfg.get('select', 'bic'),
                            folds=cfg.folds, seed=cfg.seed, n_jobs=cfg.threads,
                            reduction_slices=cfg.reduction_slices, **kw)
        model = res.model
        report['criterion'] = res.criterion
        report['lambda_trace'] = [{'lambda': lam, 'value': value if math.isfinite(value) else None}
                                  for lam, value in res.criterion_trace]
    else:
        model = fit(data, spec, cfg.d, seed=cfg.seed, n_jobs=cfg.threads, lam=cfg.get('lambda'),
                    reduction_slices=cfg.reduction_slices, **kw)
    report.update({
        'q_trace': list(model.q_trace), 'iterations': model.iterations, 'converged': model.converged,
        'backend': model.backend, 'seed': model.seed, 'd': model.d, 'lambda': model.lam,
        'active_set': [data.names[j] for j in model.active_set],
    })
    if 'lambda_max' in model.info:
        report['lambda_max'] = model.info['lambda_max']
    if cfg.timing:
        report['time'] = model.info.get('time')
    _write_text(cfg.model, model.to_json())
    _write_text(cfg.report, _dumps(report))
    logger.info("Wrote %s and %s", cfg.model, cfg.report)
    return EXIT_OK


def _reduction(model, codes, cfg):
    if math.prod(int(g) for g in model.thresholds.g) <= codes.shape[0]:
        table = tabulate(model, memory_budget=cfg.memory_budget, seed=cfg.seed, n_jobs=cfg.threads,
                         budget=cfg.get('budget', 2**12))
        if isinstance(table, LookupTable):
            return table(codes)
        return table.reducer(codes).r
    reducer = Reducer(model, seed=cfg.seed, budget=cfg.get('budget', 2**12))
    res = reducer(codes)
    logger.info("Reduction cache: %s", res.cache_stats)
    return res.r


def _index(model, table, r):
    if model.d != 1:
        raise DimensionNotOne("An index needs a one-dimensional reduction (d=%d)" % model.d)
    if model.response_name not in table.columns:
        raise UnknownColumn("Response column %r needed to orient the index" % model.response_name,
                            column=model.response_name)
    return normalized_index(r, table[model.response_name].to_numpy(),
                            model.response_kind == 'categorical')


def cmd_reduce(cfg):
    """ Reduce every row of a CSV of predictors with a stored model """
    model = _read_model(cfg.model)
    table = _read_table(cfg.input)
    r = _reduction(model, _codes(model, table), cfg)
    out = pd.DataFrame(r, columns=['R%d' % (k + 1) for k in range(model.d)])
    if cfg.ses_index:
        out['ses_index'] = _index(model, table, r)
    _write_csv(out, cfg.output)
    return EXIT_OK


def cmd_ses_index(cfg):
    """ Normalized one-dimensional index of every row """
    model = _read_model(cfg.model)
    table = _read_table(cfg.input)
    if model.d != 1:
        raise DimensionNotOne("An index needs a one-dimensional reduction (d=%d)" % model.d)
    r = Reducer(model, seed=cfg.seed, budget=cfg.get('budget', 2**12))(_codes(model, table)).r
    _write_csv(pd.DataFrame({'ses_index': _index(model, table, r)}), cfg.output)
    return EXIT_OK


def cmd_select_dim(cfg):
    """ Choose the dimension, print the decision as JSON """
    data = _dataset(cfg)
    spec = _basis(cfg, data)
    kw = _fit_kw(cfg)
    if cfg.method == 'perm':
        decision = permutation_select(data, spec, B=cfg.B, level=cfg.level, seed=cfg.seed,
                                      n_jobs=cfg.threads, **kw)
    elif cfg.method == 'cv':
        decision = cv_select(data, spec, folds=cfg.folds, seed=cfg.seed, n_jobs=cfg.threads, **kw)
    else:
        decision = ic_select(data, spec, cfg.method, seed=cfg.seed, n_jobs=cfg.threads, **kw)
    sys.stdout.write(_dumps({'d_hat': decision.d_hat, 'method': decision.method,
                             'diagnostics': decision.diagnostics}))
    if cfg.output:
        _write_csv(decision.to_frame(), cfg.output)
    return EXIT_OK


def _design(value):
    if isinstance(value, dict):
        return SimDesign.from_dict(value)
    if os.path.isfile(value):
        return SimDesign.from_dict(load_config(value))
    return SimDesign.preset(value)


def cmd_simulate(cfg):
    """ Replicated fits on synthetic data, one CSV row per replicate """
    design = _design(cfg.design)
    spec = None
    if cfg.basis is not None:
        if cfg.basis == 'slices':
            spec = BasisSpec.slices(cfg.get('slices', 10))
        else:
            spec = BasisSpec.polynomial(cfg.get('degree', 2))
    spec = spec or design_basis(design)
    kw = _fit_kw(cfg)

    def one(seed):
        return simulate_replicate(design, seed, spec=spec, d=cfg.d, lam=cfg.get('lambda'),
                                  timing=cfg.timing, **kw)

    rows = run_replicates(one, replicate_seeds(cfg.seed, cfg.reps), n_jobs=cfg.threads)
    _write_csv(pd.DataFrame(rows), cfg.output)
    return EXIT_OK


def cmd_benchmark(cfg):
    """ Run a named benchmark; per-replicate rows to ``output``, summary to stdout """
    results, summary = run_benchmark(cfg.benchmark, reps=cfg.reps, seed=cfg.seed, n=cfg.n, p=cfg.p,
                                     rho=cfg.rho, B=cfg.B, folds=cfg.folds, budget=cfg.budget,
                                     n_jobs=cfg.threads, timing=cfg.timing)
    if cfg.output:
        _write_csv(results, cfg.output)
        _write_csv(summary)
    else:
        _write_csv(results)
        sys.stdout.write('\n')
        _write_csv(summary)
    return EXIT_OK


COMMANDS = {
    'fit': cmd_fit,
    'reduce': cmd_reduce,
    'select-dim': cmd_select_dim,
    'simulate': cmd_simulate,
    'benchmark': cmd_benchmark,
    'ses-index': cmd_ses_index,
}


def _add_data_options(p):
    p.add_argument('--input', '-i', help="CSV with ordinal predictors and the response")
    p.add_argument('--response', help="Name of the response column")
    p.add_argument('--predictors', help="Comma separated predictor columns (default: all others)")
    p.add_argument('--response-kind', dest='response_kind', choices=('continuous', 'categorical'))


def _add_fit_options(p):
    p.add_argument('--basis', choices=('polynomial', 'slices'))
    p.add_argument('--degree', type=int, help="Degree of the polynomial basis")
    p.add_argument('--slices', type=int, help="Slices of the slice basis")
    p.add_argument('--backend', choices=('approximate', 'exact'))
    p.add_argument('--tol', type=float)
    p.add_argument('--max-iter', dest='max_iter', type=int)
    p.add_argument('--budget', type=int, help="Quasi-Monte Carlo points per rectangle")


def _add_run_options(p):
    p.add_argument('--config', '-c', help="JSON or TOML file with options (flags win)")
    p.add_argument('--seed', type=int)
    p.add_argument('--threads', type=int)
    p.add_argument('--verbose', '-v', action='count', default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog='ordred', description=__doc__.split('\n\n')[0].strip())
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('fit', help="Fit the model to a CSV file")
    _add_data_options(p)
    _add_fit_options(p)
    _add_run_options(p)
    p.add_argument('-d', type=int, help="Dimension of the reduction")
    p.add_argument('--model', '-o', help="Output model file (default: model.json)")
    p.add_argument('--report', help="Output report file (default: fit-report.json)")
    p.add_argument('--lambda', dest='lambda', type=float, help="Group-lasso penalty")
    p.add_argument('--lambda-grid', dest='lambda_grid', help="Comma separated penalties to select from")
    p.add_argument('--select', choices=('aic', 'bic', 'cv'), help="Penalty selection criterion")
    p.add_argument('--folds', type=int)
    p.add_argument('--reduction-slices', dest='reduction_slices', type=int)
    p.add_argument('--no-timing', dest='timing', action='store_const', const=False)

    p = sub.add_parser('reduce', help="Reduce rows of a CSV file with a fitted model")
    p.add_argument('--model', '-m')
    p.add_argument('--input', '-i')
    p.add_argument('--output', '-o', help="Output CSV (default: stdout)")
    p.add_argument('--ses-index', dest='ses_index', action='store_const', const=True,
                   help="Add the normalized index column (d=1 and response column needed)")
    p.add_argument('--budget', type=int)
    p.add_argument('--memory-budget', dest='memory_budget', type=int, help="Bytes of the lookup table")
    _add_run_options(p)

    p = sub.add_parser('select-dim', help="Choose the dimension of the reduction")
    _add_data_options(p)
    _add_fit_options(p)
    _add_run_options(p)
    p.add_argument('--method', choices=('perm', 'cv', 'aic', 'bic'))
    p.add_argument('-B', dest='B', type=int, help="Permutations per test")
    p.add_argument('--level', type=float)
    p.add_argument('--folds', type=int)
    p.add_argument('--output', '-o', help="Diagnostics CSV")

    p = sub.add_parser('simulate', help="Replicated fits on synthetic data")
    _add_fit_options(p)
    _add_run_options(p)
    p.add_argument('--design', help="Preset name or design file")
    p.add_argument('--reps', type=int)
    p.add_argument('-d', type=int, help="Fitted dimension (default: the design's)")
    p.add_argument('--lambda', dest='lambda', type=float)
    p.add_argument('--output', '-o')
    p.add_argument('--no-timing', dest='timing', action='store_const', const=False)

    p = sub.add_parser('benchmark', help="Run a named simulation benchmark")
    p.add_argument('benchmark', nargs='?', choices=BENCHMARKS)
    _add_run_options(p)
    p.add_argument('--reps', type=int)
    p.add_argument('-n', dest='n', type=int)
    p.add_argument('-p', dest='p', type=int)
    p.add_argument('--rho', type=float)
    p.add_argument('-B', dest='B', type=int)
    p.add_argument('--folds', type=int)
    p.add_argument('--budget', type=int)
    p.add_argument('--output', '-o')
    p.add_argument('--no-timing', dest='timing', action='store_const', const=False)

    p = sub.add_parser('ses-index', help="Normalized one-dimensional index")
    p.add_argument('--model', '-m')
    p.add_argument('--input', '-i')
    p.add_argument('--output', '-o')
    p.add_argument('--budget', type=int)
    _add_run_options(p)
    return parser


_error_attrs = ('column', 'key', 'index', 'iteration', 'lam', 'rows')


def _report_error(exc):
    doc = {'error': type(exc).__name__, 'message': str(exc)}
    for attr in _error_attrs:
        value = getattr(exc, attr, None)
        if value is not None:
            doc[attr] = value
    sys.stderr.write(json.dumps(doc, sort_keys=True, default=_json_default) + '\n')


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')
    logging.captureWarnings(True)
    flags = {k: v for k, v in vars(args).items() if k not in ('command', 'config', 'verbose')}
    try:
        cfg = RunConfig.build(args.command, path=args.config, flags=flags)
        return COMMANDS[args.command](cfg)
    except (ValidationError, ConfigError, OSError) as exc:
        _report_error(exc)
        return EXIT_INPUT
    except NumericalError as exc:
        _report_error(exc)
        return EXIT_NUMERICAL
    except Exception as exc:
        logger.exception("Internal error")
        _report_error(exc)
        return EXIT_INTERNAL


if __name__ == '__main__':
    sys.exit(main())
