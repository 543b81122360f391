# -*- coding: utf-8 -*-
"""
Replicated simulation experiments: every benchmark maps a replicate function
over derived seeds and returns a per-replicate table and a summary table.
"""
from __future__ import (absolute_import, division, print_function)

import logging
import time

import numpy as np
import pandas as pd

from .dimension import cv_select, ic_select, permutation_select, prediction_error
from .em import fit
from .model import BasisSpec, build_basis
from .pfc import fit_pfc
from .reduce import Reducer, normalized_index
from .regularize import select_lambda
from .simulate import (SimDesign, generate, replicate_seeds, run_replicates, selection_metrics,
                       subspace_angle)
from .util import import_

KNeighborsRegressor = import_('sklearn.neighbors', 'KNeighborsRegressor')
LinearRegression = import_('sklearn.linear_model', 'LinearRegression')
PCA = import_('sklearn.decomposition', 'PCA')

logger = logging.getLogger(__name__)


def design_basis(design, degree=None):
    """ Basis matching a design: slices for class responses, polynomial otherwise """
    if design.response == 'classes':
        return BasisSpec.slices(design.n_classes)
    return BasisSpec.polynomial(degree or design.r)


def _safe_angle(truth, estimate):
    if truth.shape[1] == 0 or estimate.shape[1] == 0:
        return float('nan')
    return subspace_angle(truth, estimate)


def simulate_replicate(design, seed, spec=None, d=None, lam=None, timing=True, **fit_kw):
    """ Generate one sample, fit it and compare with the ground truth """
    design = design.replace(seed=seed)
    data, truth = generate(design)
    spec = spec or design_basis(design)
    d = design.d if d is None else d
    t0 = time.perf_counter()
    model = fit(data, spec, d, lam=lam, seed=seed, **fit_kw)
    elapsed = time.perf_counter() - t0
    pfc = fit_pfc(data.x, build_basis(data.y, spec, categorical=data.categorical), d)
    row = {'seed': seed, 'd': d, 'angle': _safe_angle(truth.alpha, model.params.alpha),
           'angle_pfc': _safe_angle(truth.alpha, pfc.alpha), 'converged': model.converged,
           'iterations': model.iterations, 'active_set': ';'.join(str(j) for j in model.active_set)}
    if timing:
        row['time'] = elapsed
    return row


def _validate_estep(design, seed, budget=None, **kw):
    design = design.replace(seed=seed)
    data, truth = generate(design)
    spec = design_basis(design)
    pfc = fit_pfc(data.x, build_basis(data.y, spec), design.d)
    row = {'seed': seed, 'angle_pfc': subspace_angle(truth.alpha, pfc.alpha)}
    for backend in ('approximate', 'exact'):
        extra = {'budget': budget} if backend == 'exact' and budget else {}
        t0 = time.perf_counter()
        model = fit(data, spec, design.d, backend=backend, seed=seed, **extra)
        row['time_%s' % backend] = time.perf_counter() - t0
        row['angle_%s' % backend] = subspace_angle(truth.alpha, model.params.alpha)
        r = Reducer(model)(data.x).r
        reg = LinearRegression().fit(r, data.y)
        row['mse_%s' % backend] = prediction_error(data.y, reg.predict(r), False)
    return row


def _knn_mse(r_train, y_train, r_test, y_test):
    k = int(np.ceil(np.sqrt(r_train.shape[0])))
    est = KNeighborsRegressor(n_neighbors=k).fit(r_train, y_train)
    return prediction_error(y_test, est.predict(r_test), False)


def _angle_comparison(design, seed, **kw):
    design = design.replace(seed=seed)
    data, truth = generate(design)
    spec = design_basis(design)
    half = data.n//2
    train = data.take(np.arange(half))
    test_x = data.x[half:]
    model = fit(train, spec, design.d, seed=seed)
    pfc = fit_pfc(train.x, build_basis(train.y, spec), design.d)
    reducer = Reducer(model)
    r_train = reducer(train.x).r
    r_test = reducer(model.encode(data.labels_of(test_x))).r
    return {
        'seed': seed,
        'angle_pfc': subspace_angle(truth.alpha, pfc.alpha),
        'angle_ord': subspace_angle(truth.alpha, model.params.alpha),
        'mse_pfc': _knn_mse(pfc.reduce(train.x), train.y, pfc.reduce(test_x), data.y[half:]),
        'mse_ord': _knn_mse(r_train, train.y, r_test, data.y[half:]),
    }


def _robustness(design, seed, **kw):
    row = {'seed': seed}
    for kind in ('normal', 'chi2'):
        data, truth = generate(design.replace(seed=seed, error_kind=kind))
        spec = design_basis(design)
        model = fit(data, spec, design.d, seed=seed)
        pfc = fit_pfc(data.x, build_basis(data.y, spec), design.d)
        row['angle_ord_%s' % kind] = subspace_angle(truth.alpha, model.params.alpha)
        row['angle_pfc_%s' % kind] = subspace_angle(truth.alpha, pfc.alpha)
    return row


def _choose_d(design, seed, B=500, folds=10, **kw):
    data, _ = generate(design.replace(seed=seed))
    spec = design_basis(design)
    return {
        'seed': seed,
        'd_perm': permutation_select(data, spec, B=B, level=0.01, seed=seed).d_hat,
        'd_cv': cv_select(data, spec, folds=folds, seed=seed).d_hat,
        'd_aic': ic_select(data, spec, 'aic', seed=seed).d_hat,
        'd_bic': ic_select(data, spec, 'bic', seed=seed).d_hat,
    }


def _variable_selection(design, seed, **kw):
    data, truth = generate(design.replace(seed=seed))
    spec = design_basis(design)
    res = select_lambda(data, spec, design.d, criterion='bic', seed=seed)
    return {'seed': seed, 'lambda': res.lam, 'active_set': ';'.join(str(j) for j in res.active_set),
            'n_active': len(res.active_set),
            'contains_truth': set(truth.active) <= set(res.active_set),
            'angle': subspace_angle(truth.alpha, res.model.params.alpha)}


def _r2(index, y):
    target = np.cbrt(y)
    design = np.column_stack([index, index**2])
    return float(LinearRegression().fit(design, target).score(design, target))


def _ses_proxy(design, seed, **kw):
    data, _ = generate(design.replace(seed=seed))
    model = fit(data, design_basis(design), 1, seed=seed)
    supervised = normalized_index(Reducer(model)(data.x).r, data.y)
    codes = data.x.astype(np.float64)
    codes = (codes - codes.mean(axis=0))/codes.std(axis=0)
    pca = normalized_index(PCA(n_components=1).fit_transform(codes), data.y)
    return {'seed': seed, 'r2_ses': _r2(supervised, data.y), 'r2_pca': _r2(pca, data.y)}


BENCHMARKS = {
    'validate-estep': ('validate-estep', {}, _validate_estep),
    'angle-comparison': ('angle-comparison', {}, _angle_comparison),
    'robustness': ('angle-comparison', {}, _robustness),
    'choose-d': ('choose-d', {}, _choose_d),
    'variable-selection': ('variable-selection', {}, _variable_selection),
    'ses-proxy': ('income', {}, _ses_proxy),
}


def _summarize(name, results):
    rows = []
    if name == 'validate-estep':
        diff = results['angle_approximate'] - results['angle_exact']
        for backend in ('approximate', 'exact'):
            rows.append({'quantity': 'mean_angle_%s' % backend, 'value': results['angle_%s' % backend].mean()})
            rows.append({'quantity': 'sd_angle_%s' % backend, 'value': results['angle_%s' % backend].std()})
            rows.append({'quantity': 'mean_mse_%s' % backend, 'value': results['mse_%s' % backend].mean()})
        rows.append({'quantity': 'mean_angle_difference', 'value': diff.mean()})
        if 'angle_pfc' in results:
            rows.append({'quantity': 'mean_angle_pfc', 'value': results['angle_pfc'].mean()})
        if 'time_exact' in results:
            rows.append({'quantity': 'speed_ratio',
                         'value': results['time_exact'].sum()/results['time_approximate'].sum()})
    elif name == 'choose-d':
        for col in ('d_perm', 'd_cv', 'd_aic', 'd_bic'):
            for d, frac in results[col].value_counts(normalize=True).sort_index().items():
                rows.append({'quantity': 'fraction_%s_%d' % (col, d), 'value': frac})
    elif name == 'variable-selection':
        truth = SimDesign.preset('variable-selection').alpha
        active = tuple(int(j) for j in np.flatnonzero(np.any(truth != 0, axis=1)))
        runs = [[int(j) for j in s.split(';') if j] for s in results['active_set']]
        for k, v in selection_metrics(active, runs).items():
            rows.append({'quantity': k, 'value': v})
    elif name == 'ses-proxy':
        rows.append({'quantity': 'fraction_ses_better', 'value': (results['r2_ses'] > results['r2_pca']).mean()})
        rows.append({'quantity': 'mean_r2_ses', 'value': results['r2_ses'].mean()})
        rows.append({'quantity': 'mean_r2_pca', 'value': results['r2_pca'].mean()})
    else:
        for col in results.columns:
            if col.startswith(('angle', 'mse')):
                rows.append({'quantity': 'mean_%s' % col, 'value': results[col].mean()})
                rows.append({'quantity': 'sd_%s' % col, 'value': results[col].std()})
    return pd.DataFrame(rows, columns=['quantity', 'value'])


def run_benchmark(name, reps=10, seed=0, n=None, p=None, rho=None, B=500, folds=10, budget=None,
                  n_jobs=1, timing=True):
    """ Run a named benchmark

    Parameters
    ----------
    name : str
        One of ``BENCHMARKS``.
    reps : int
    seed : int
        Master seed, replicate ``i`` uses ``derive_seed(seed, i)``.
    n, p, rho : optional overrides of the design.
    B, folds : int
        Permutations and folds of 'choose-d'.
    budget : int
        Exact-backend budget of 'validate-estep'.
    n_jobs : int
        Parallel replicates.
    timing : bool
        Keep wall-clock columns.

    Returns
    -------
    (pandas.DataFrame, pandas.DataFrame)
        Per-replicate results and the summary.

    """
    preset, overrides, cb = BENCHMARKS[name]
    overrides = dict(overrides)
    for key, value in (('n', n), ('p', p), ('rho', rho)):
        if value is not None:
            overrides[key] = value
    design = SimDesign.preset(preset, **overrides)
    logger.info("benchmark %s: %d replicates of %r", name, reps, design)

    def one(s):
        return cb(design, s, B=B, folds=folds, budget=budget)

    results = pd.DataFrame(run_replicates(one, replicate_seeds(seed, reps), n_jobs=n_jobs))
    summary = _summarize(name, results)
    if not timing:
        results = results[[c for c in results.columns if not c.startswith('time')]]
        summary = summary[~summary['quantity'].isin(['speed_ratio'])]
    return results, summary
