# -*- coding: utf-8 -*-
"""
Choice of the dimension ``d`` of the reduction: permutation test on the
likelihood-ratio-type statistic, information criteria and cross-validation.
"""
from __future__ import (absolute_import, division, print_function)

from collections import namedtuple
import logging
import math

import numpy as np
import pandas as pd
from scipy.linalg import null_space

from .em import fit, q_profile, summarize
from .model import OrdinalDataset, build_basis
from .reduce import conditional_mean, reduce
from .util import NumericalError, OrdredError, ValidationError, derive_seed, import_

Parallel, delayed = import_('joblib', 'Parallel', 'delayed')
KFold = import_('sklearn.model_selection', 'KFold')

logger = logging.getLogger(__name__)


class DimensionDecision(object):
    """ Selected dimension with the per-candidate diagnostics

    Attributes
    ----------
    d_hat : int
    method : str
        'permutation', 'cv', 'aic' or 'bic'.
    diagnostics : list of dict
        One entry per examined candidate.

    """

    methods = ('permutation', 'cv', 'aic', 'bic')

    def __init__(self, d_hat, method, diagnostics):
        if method not in self.methods:
            raise ValidationError("Unknown method: %s" % method)
        self.d_hat = int(d_hat)
        self.method = method
        self.diagnostics = list(diagnostics)

    def to_frame(self):
        return pd.DataFrame(self.diagnostics)

    def __repr__(self):
        return "DimensionDecision(d_hat=%d, method=%s)" % (self.d_hat, self.method)


def _max_d(data, spec):
    return min(build_basis(data.y, spec, categorical=data.categorical).r, data.p)


def lrt_from_model(data, model):
    """ ``2 (Q_p(I_p) - Q_m(alpha))`` evaluated on the E-step summary at ``model`` """
    summary = summarize(data, model)
    return 2*(q_profile(summary, np.eye(data.p)) - q_profile(summary, model.params.alpha))


def lrt_statistic(data, spec, m, **fit_kw):
    """ Likelihood-ratio-type statistic of dimension ``m`` against the full model

    The full model (``alpha = I_p``) is profiled on the same E-step summary as
    the ``m``-dimensional fit, so the statistic is never negative.
    """
    if not 0 <= m <= _max_d(data, spec):
        raise ValidationError("Need 0 <= m <= min(r, p)")
    return lrt_from_model(data, fit(data, spec, m, **fit_kw))


def discretize(z, thresholds):
    """ Codes ``1..G_j`` of latent values under a threshold set """
    z = np.atleast_2d(z)
    return np.column_stack([np.searchsorted(thresholds[j], z[:, j], side='right') + 1
                            for j in range(z.shape[1])])


def _permutation_replicate(data, spec, m, basis, complement, ez, thresholds, seed, fit_kw):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n)
    z = ez @ basis @ basis.T + ez[perm] @ complement @ complement.T
    try:
        star = OrdinalDataset.from_codes(discretize(z, thresholds), data.y, names=data.names,
                                         response_name=data.response_name,
                                         response_kind=data.response_kind)
        return lrt_statistic(star, spec, m, seed=seed, **fit_kw)
    except OrdredError as exc:
        logger.warning("Permutation replicate skipped: %s", exc)
        return float('nan')


def permutation_select(data, spec, B=500, level=0.01, seed=0, n_jobs=1, **fit_kw):
    """ Sequential permutation test for the dimension

    For ``m = 0, 1, ...`` the coordinates of ``E(Z | X)`` outside the
    estimated ``m``-dimensional subspace are permuted jointly across
    observations, re-discretized with the estimated thresholds and refit;
    the p-value is the fraction of permuted statistics at least as large as
    the observed one. The first ``m`` that is not rejected is returned
    (``min(r, p)`` when every test rejects).

    Parameters
    ----------
    data : OrdinalDataset
    spec : BasisSpec
    B : int
        Permutations per test.
    level : float
    seed : int
    n_jobs : int
        Parallel replicates.
    \\*\\*fit_kw :
        Passed to :func:`ordred.em.fit`.

    Returns
    -------
    DimensionDecision

    """
    if B < 1:
        raise ValidationError("B must be positive")
    if not 0 < level < 1:
        raise ValidationError("level must lie in (0, 1)")
    top = _max_d(data, spec)
    diagnostics = []
    d_hat = top
    for m in range(top):
        model = fit(data, spec, m, seed=seed, **fit_kw)
        stat = lrt_from_model(data, model)
        ez = conditional_mean(data.x, model, n_jobs=n_jobs)
        alpha = model.params.alpha
        complement = null_space(alpha.T) if m else np.eye(data.p)
        tasks = [(data, spec, m, alpha, complement, ez, model.thresholds, derive_seed(seed, m, b), fit_kw)
                 for b in range(B)]
        if n_jobs == 1:
            stars = [_permutation_replicate(*t) for t in tasks]
        else:
            stars = Parallel(n_jobs=n_jobs)(delayed(_permutation_replicate)(*t) for t in tasks)
        stars = np.array(stars, dtype=np.float64)
        valid = stars[np.isfinite(stars)]
        if valid.size == 0:
            raise NumericalError("Every permutation replicate failed for m=%d" % m)
        p_value = float(np.mean(valid >= stat))
        logger.info("m=%d: statistic %.6g, p-value %.4g (%d replicates)", m, stat, p_value, valid.size)
        diagnostics.append({'m': m, 'statistic': stat, 'p_value': p_value, 'replicates': int(valid.size)})
        if p_value > level:
            d_hat = m
            break
    return DimensionDecision(d_hat, 'permutation', diagnostics)


def ic_penalty(r, p, d, n_theta):
    """ Number of free parameters ``r d + d (p - d) + p (p + 3) / 2 + n_theta``

    Examples
    --------
    >>> ic_penalty(4, 10, 2, 30)
    119

    """
    return r*d + d*(p - d) + p*(p + 3)//2 + n_theta


def _ic_candidate(data, spec, d, c, r, seed, fit_kw):
    model = fit(data, spec, d, seed=seed, **fit_kw)
    h = ic_penalty(r, data.p, d, data.n_thresholds)
    return {'d': d, 'q': model.q, 'h': h, 'criterion': -2*model.q + c*h}


def ic_select(data, spec, criterion='bic', seed=0, n_jobs=1, **fit_kw):
    """ Dimension minimizing ``-2 Q + c h`` (``c = 2`` for AIC, ``log n`` for BIC)

    Returns
    -------
    DimensionDecision
        The diagnostics hold ``Q``, ``h`` and the criterion of every
        candidate ``0..min(r, p)``.

    """
    if criterion not in ('aic', 'bic'):
        raise ValidationError("Unknown criterion: %s" % criterion)
    c = 2.0 if criterion == 'aic' else math.log(data.n)
    r = build_basis(data.y, spec, categorical=data.categorical).r
    candidates = range(min(r, data.p) + 1)
    if n_jobs == 1:
        rows = [_ic_candidate(data, spec, d, c, r, seed, fit_kw) for d in candidates]
    else:
        rows = Parallel(n_jobs=n_jobs)(delayed(_ic_candidate)(data, spec, d, c, r, seed, fit_kw)
                                       for d in candidates)
    for row in rows:
        logger.info("d=%d: %s=%.6g", row['d'], criterion, row['criterion'])
    d_hat = int(np.argmin([row['criterion'] for row in rows]))
    return DimensionDecision(d_hat, criterion, rows)


def knn_rule(R, y, categorical=False, k=None):
    """ k-nearest neighbours with ``k = ceil(sqrt(n_train))`` by default """
    from sklearn.neighbors import KNeighborsClassifier, KNeighborsRegressor
    n = R.shape[0]
    k = min(int(math.ceil(math.sqrt(n))) if k is None else int(k), n)
    est = KNeighborsClassifier(n_neighbors=k) if categorical else KNeighborsRegressor(n_neighbors=k)
    return est.fit(R, y)


def linear_rule(R, y, categorical=False):
    from sklearn.linear_model import LinearRegression
    if categorical:
        raise ValidationError("The linear rule needs a continuous response")
    return LinearRegression().fit(R, y)


def logistic_rule(R, y, categorical=True):
    from sklearn.linear_model import LogisticRegression
    if not categorical:
        raise ValidationError("The logistic rule needs a categorical response")
    return LogisticRegression(max_iter=1000).fit(R, y)


RULES = {
    'knn': knn_rule,
    'linear': linear_rule,
    'logistic': logistic_rule,
}


class _Constant(object):

    def __init__(self, value):
        self.value = value

    def predict(self, R):
        return np.full(R.shape[0], self.value, dtype=object if isinstance(self.value, str) else None)


def _baseline(y, categorical):
    if categorical:
        labels, counts = np.unique(y, return_counts=True)
        return _Constant(labels[np.argmax(counts)])
    return _Constant(float(np.mean(y)))


def prediction_error(y_true, y_pred, categorical):
    """ Mean squared error, or misclassification rate for a categorical response """
    if categorical:
        return float(np.mean(np.asarray(y_true) != np.asarray(y_pred)))
    return float(np.mean((np.asarray(y_true, dtype=np.float64) - np.asarray(y_pred, dtype=np.float64))**2))


def _fold_error(data, spec, d, rule, train, test, seed, lam, fit_kw):
    train_data = data.take(train)
    y_test = data.y[test]
    if d == 0:
        est = _baseline(train_data.y, data.categorical)
        return prediction_error(y_test, est.predict(np.zeros((len(test), 1))), data.categorical)
    model = fit(train_data, spec, d, seed=seed, lam=lam, **fit_kw)
    r_train = reduce(train_data.x, model)
    r_test = reduce(model.encode(data.labels_of(data.x[test])), model)
    cb = rule if callable(rule) else RULES[rule]
    est = cb(r_train, train_data.y, data.categorical)
    return prediction_error(y_test, est.predict(r_test), data.categorical)


CvResult = namedtuple('CvResult', 'mean se errors')


def cv_error(data, spec, d, rule='knn', folds=10, seed=0, lam=None, n_jobs=1, **fit_kw):
    """ Out-of-fold prediction error of a rule trained on the reduction

    Parameters
    ----------
    data : OrdinalDataset
    spec : BasisSpec
    d : int
        ``0`` predicts the training mean (majority class).
    rule : str or callable
        'knn', 'linear', 'logistic' or ``rule(R, y, categorical)`` returning
        an object with ``predict``.
    folds : int
    seed : int
        Fold assignment and fits.
    lam : float, optional
        Group-lasso penalty of the fits.

    Returns
    -------
    CvResult
        ``(mean, se, errors)`` over the folds.

    """
    if folds < 2:
        raise ValidationError("Need at least 2 folds")
    if not callable(rule) and rule not in RULES:
        raise ValidationError("Unknown prediction rule: %s" % rule)
    splits = list(KFold(n_splits=folds, shuffle=True, random_state=seed).split(data.x))
    tasks = [(data, spec, d, rule, train, test, seed, lam, fit_kw) for train, test in splits]
    if n_jobs == 1:
        errors = [_fold_error(*t) for t in tasks]
    else:
        errors = Parallel(n_jobs=n_jobs)(delayed(_fold_error)(*t) for t in tasks)
    errors = np.array(errors)
    return CvResult(float(errors.mean()), float(errors.std(ddof=1)/math.sqrt(folds)), errors)


def cv_select(data, spec, folds=10, rule='knn', seed=0, n_jobs=1, one_se=True, **fit_kw):
    """ Dimension with the smallest cross-validated prediction error

    With ``one_se`` the smallest ``d`` whose error is within one standard
    error of the minimum is returned.

    Returns
    -------
    DimensionDecision

    """
    rows = []
    for d in range(_max_d(data, spec) + 1):
        res = cv_error(data, spec, d, rule=rule, folds=folds, seed=seed, n_jobs=n_jobs, **fit_kw)
        logger.info("d=%d: cv error %.6g (se %.3g)", d, res.mean, res.se)
        rows.append({'d': d, 'error': res.mean, 'se': res.se})
    means = np.array([row['error'] for row in rows])
    best = int(np.argmin(means))
    d_hat = best
    if one_se:
        bound = means[best] + rows[best]['se']
        d_hat = int(np.flatnonzero(means <= bound)[0])
    return DimensionDecision(d_hat, 'cv', rows)
