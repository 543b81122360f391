# -*- coding: utf-8 -*-
"""
Group-lasso penalized estimation of alpha (simultaneous variable selection
and dimension reduction) and selection of the penalty weight.
"""
from __future__ import (absolute_import, division, print_function)

import logging
import math

import numpy as np

from .em import fit, summarize
from .model import build_basis
from .util import NumericalError, ValidationError, import_, s_orthonormalize, sym_power

Parallel, delayed = import_('joblib', 'Parallel', 'delayed')

logger = logging.getLogger(__name__)


class AllRowsKilled(NumericalError):
    """ The penalty removes so many predictors that ``alpha^T S alpha = I`` is infeasible """

    def __init__(self, msg, lam=None):
        super(AllRowsKilled, self).__init__(msg)
        self.lam = lam


class PenalizedAlpha(object):
    """ Result of :func:`fit_penalized_alpha`

    Attributes
    ----------
    alpha : array (p, d)
        Satisfies ``alpha^T S alpha = I`` (zero matrix when ``all_killed``).
    objective : float
        ``-tr(alpha^T S_fit alpha) + lam * sum_i ||alpha_i||``.
    iterations : int
    all_killed : bool

    """

    def __init__(self, alpha, objective, iterations, all_killed=False):
        self.alpha = alpha
        self.objective = objective
        self.iterations = iterations
        self.all_killed = all_killed

    @property
    def active_set(self):
        return tuple(int(j) for j in np.flatnonzero(np.any(self.alpha != 0, axis=1)))


def penalized_objective(summary, alpha, lam):
    return float(-np.trace(alpha.T @ summary.S_fit @ alpha) + lam*np.linalg.norm(alpha, axis=1).sum())


def _soft_threshold_rows(a, c):
    norms = np.linalg.norm(a, axis=1)
    with np.errstate(divide='ignore', invalid='ignore'):
        shrink = np.where(norms > c, 1 - c/norms, 0.0)
    return a*shrink[:, None]


def _unpenalized_alpha(summary, d):
    root = sym_power(summary.S, -0.5)
    kernel = root @ summary.S_fit @ root
    w, v = np.linalg.eigh((kernel + kernel.T)/2)
    return root @ v[:, ::-1][:, :d], max(w[-1], 0.0), root


def fit_penalized_alpha(summary, d, lam, init=None, max_iter=500, rtol=1e-7, zero_tol=1e-8):
    """ Minimize ``-tr(a^T S_fit a) + lam sum_i ||a_i||`` subject to ``a^T S a = I``

    Proximal gradient iterations: a gradient step on the trace term in the
    whitened coordinates ``S^1/2 a``, row-wise group soft-thresholding of
    ``a`` and restoration of ``a^T S a = I`` by the polar factor under the
    inner product of ``S``. The best iterate seen (the unpenalized optimum
    included) is returned, rows with norm below ``zero_tol`` set to zero.

    Parameters
    ----------
    summary : EStepSummary
    d : int
    lam : float
        Non-negative penalty weight.
    init : array (p, d), optional
        Starting point (default: the unpenalized maximizer).
    max_iter : int
    rtol : float
        Stop when the relative change of the objective is below ``rtol``.
    zero_tol : float

    Returns
    -------
    PenalizedAlpha
        ``all_killed`` is set when the first proximal step leaves fewer than
        ``d`` non-zero rows.

    """
    if lam < 0:
        raise ValidationError("lambda must be non-negative")
    S = summary.S
    p = S.shape[0]
    alpha0, top, _ = _unpenalized_alpha(summary, d)
    if d == 0:
        return PenalizedAlpha(np.zeros((p, 0)), 0.0, 0)
    step = 0.5/top if top > 0 else 1.0
    direction = np.linalg.solve(S, summary.S_fit)
    alpha = alpha0 if init is None else s_orthonormalize(init, S)
    best = alpha
    best_obj = obj = penalized_objective(summary, alpha, lam)
    if init is not None:
        obj0 = penalized_objective(summary, alpha0, lam)
        if obj0 < best_obj:
            best, best_obj = alpha0, obj0
    it = 0
    for it in range(1, max_iter + 1):
        trial = _soft_threshold_rows(alpha + 2*step*direction @ alpha, step*lam)
        if np.sum(np.any(trial != 0, axis=1)) < d:
            if it == 1:
                return PenalizedAlpha(np.zeros((p, d)), float('inf'), it, all_killed=True)
            break
        try:
            alpha = s_orthonormalize(trial, S)
        except NumericalError:
            break
        prev, obj = obj, penalized_objective(summary, alpha, lam)
        if obj < best_obj:
            best, best_obj = alpha, obj
        if abs(obj - prev) <= rtol*max(abs(prev), 1e-300):
            break
    alpha = np.where(np.linalg.norm(best, axis=1)[:, None] < zero_tol, 0.0, best)
    if not np.array_equal(alpha, best):
        alpha = s_orthonormalize(alpha, S)
    return PenalizedAlpha(alpha, penalized_objective(summary, alpha, lam), it)


def lambda_max(summary, d):
    """ Smallest penalty that zeroes every row in the first proximal step
    from the unpenalized solution; upper end of the default grid. """
    alpha0, top, _ = _unpenalized_alpha(summary, d)
    if d == 0:
        return 0.0
    step = 0.5/top if top > 0 else 1.0
    moved = alpha0 + 2*step*np.linalg.solve(summary.S, summary.S_fit) @ alpha0
    return float(np.linalg.norm(moved, axis=1).max()/step)


def lambda_grid(lam_max, num=30, ratio=1e-4):
    """ ``num`` log-spaced penalties from ``ratio*lam_max`` to ``lam_max``

    Examples
    --------
    >>> grid = lambda_grid(2.0, num=3, ratio=0.25)
    >>> [round(v, 12) for v in grid]
    [0.5, 1.0, 2.0]

    """
    if not lam_max > 0:
        raise ValidationError("lam_max must be positive")
    return np.logspace(math.log10(ratio*lam_max), math.log10(lam_max), num).tolist()


class RegularizedFit(object):
    """ Penalized fit chosen along a grid of penalties

    Attributes
    ----------
    model : FittedModel
    lam : float
    active_set : tuple of int
    criterion : str
    criterion_trace : list of (lam, value)
        ``inf`` for penalties that removed every predictor.

    """

    def __init__(self, model, lam, criterion, criterion_trace):
        self.model = model
        self.lam = lam
        self.criterion = criterion
        self.criterion_trace = criterion_trace

    @property
    def active_set(self):
        return self.model.active_set

    def __repr__(self):
        return "RegularizedFit(lam=%g, active_set=%s, criterion=%s)" % (
            self.lam, list(self.active_set), self.criterion)


def _criterion_value(data, spec, d, model, criterion, rule, folds, seed, fit_kw):
    from .dimension import cv_error, ic_penalty
    if criterion in ('aic', 'bic'):
        c = 2.0 if criterion == 'aic' else math.log(data.n)
        k = len(model.active_set)
        return -2*model.q + c*ic_penalty(model.params.r, k, d, data.n_thresholds)
    return cv_error(data, spec, d, rule=rule, folds=folds, seed=seed, lam=model.lam, **fit_kw).mean


def _grid_point(data, spec, d, lam, criterion, rule, folds, seed, init, fit_kw):
    try:
        model = fit(data, spec, d, lam=lam, seed=seed, init=init, **fit_kw)
    except AllRowsKilled:
        return None, float('inf')
    except NumericalError as exc:
        exc.lam = lam
        raise
    return model, _criterion_value(data, spec, d, model, criterion, rule, folds, seed, fit_kw)


def select_lambda(data, spec, d, grid=None, criterion='bic', rule='knn', folds=10, seed=0,
                  warm_start=False, n_jobs=1, **fit_kw):
    """ Fit along a grid of penalties and keep the one minimizing a criterion

    Parameters
    ----------
    data : OrdinalDataset
    spec : BasisSpec
    d : int
    grid : sequence of float, optional
        Ascending penalties (default: :func:`lambda_grid` of
        :func:`lambda_max` at the unpenalized fit).
    criterion : str
        'aic', 'bic' (``-2Q + c h`` with ``p`` replaced by the number of
        active predictors) or 'cv' (out-of-fold prediction error).
    rule : str
        Prediction rule of the 'cv' criterion.
    folds : int
    seed : int
    warm_start : bool
        Fit the grid sequentially, every point starting at the previous
        solution. Otherwise points are independent (and run in parallel
        with ``n_jobs``).
    \\*\\*fit_kw :
        Passed to :func:`ordred.em.fit`.

    Returns
    -------
    RegularizedFit

    """
    if criterion not in ('aic', 'bic', 'cv'):
        raise ValidationError("Unknown criterion: %s" % criterion)
    lam_max = None
    if grid is None:
        base = fit(data, spec, d, seed=seed, **fit_kw)
        lam_max = lambda_max(summarize(data, base), d)
        grid = [0.0] + lambda_grid(lam_max)
    grid = [float(v) for v in grid]
    if not grid:
        raise ValidationError("Empty lambda grid")
    if any(v < 0 for v in grid) or any(b < a for a, b in zip(grid, grid[1:])):
        raise ValidationError("lambda grid must be non-negative and ascending")
    build_basis(data.y, spec, categorical=data.categorical)
    args = (criterion, rule, folds, seed)
    if warm_start:
        results, init = [], None
        for lam in grid:
            model, value = _grid_point(data, spec, d, lam, *(args + (init, fit_kw)))
            logger.info("lambda=%g: %s=%g", lam, criterion, value)
            results.append((model, value))
            if model is not None:
                init = model.params
    else:
        tasks = [(data, spec, d, lam) + args + (None, fit_kw) for lam in grid]
        if n_jobs == 1:
            results = [_grid_point(*t) for t in tasks]
        else:
            results = Parallel(n_jobs=n_jobs)(delayed(_grid_point)(*t) for t in tasks)
        for lam, (_, value) in zip(grid, results):
            logger.info("lambda=%g: %s=%g", lam, criterion, value)
    trace = [(lam, value) for lam, (_, value) in zip(grid, results)]
    values = np.array([v for _, v in trace])
    if not np.any(np.isfinite(values)):
        raise AllRowsKilled("Every penalty on the grid removes every predictor", lam=grid[0])
    best = int(np.argmin(values))
    model = results[best][0]
    if lam_max is not None:
        model.info['lambda_max'] = lam_max
    return RegularizedFit(model, grid[best], criterion, trace)
