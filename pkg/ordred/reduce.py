# -*- coding: utf-8 -*-
"""
The supervised reduction ``R(x) = alpha^T E(Z | X = x)``.

``E(Z | x)`` mixes the conditional expectations ``E(Z | x, Y in slice s)``
with the posterior slice weights ``w_s(x) ~ P(x | s) P(s)``; the slice
probabilities of the cell of ``x`` are evaluated in the log domain.
"""
from __future__ import (absolute_import, division, print_function)

from collections import namedtuple
from functools import lru_cache
import itertools
import logging
import math

import numpy as np
from scipy.special import logsumexp

from .tmvn import MOMENT_BACKENDS, Rectangle, rect_prob
from .util import NumericalError, ValidationError, derive_seed, import_

Parallel, delayed = import_('joblib', 'Parallel', 'delayed')

logger = logging.getLogger(__name__)


class AllWeightsUnderflow(NumericalError):
    pass


class DimensionNotOne(ValidationError):
    pass


class ZeroVariance(NumericalError):
    pass


def _codes(x, model):
    x = np.asarray(x)
    if x.dtype.kind not in 'iu':
        if not np.all(np.mod(x, 1) == 0):
            raise ValidationError("Codes must be integers")
        x = x.astype(np.int64)
    if x.shape[-1] != model.p:
        raise ValidationError("Expected %d codes per row, got %d" % (model.p, x.shape[-1]))
    return x


def log_posterior_weights(x, model, seed=None, budget=2**12, tol=None):
    """ Normalized log weights of the response slices given one code vector """
    x = _codes(x, model)
    seed = model.seed if seed is None else seed
    cell = Rectangle.from_codes(x, model.thresholds)
    params, slices = model.params, model.slices
    means = slices.fbar @ params.psi.T
    logp = np.array([
        rect_prob(means[s], params.delta, cell, budget=budget, tol=tol,
                  seed=derive_seed(seed, s, *x)).log_prob
        for s in range(slices.h)])
    logw = logp + np.log(slices.prior)
    if not np.any(np.isfinite(logw)):
        raise AllWeightsUnderflow("Every slice probability of x=%s underflows" % x.tolist())
    return logw - logsumexp(logw)


def posterior_weights(x, model, seed=None, budget=2**12, tol=None):
    """ Posterior probabilities ``P(Y in slice s | X = x)`` of the response slices

    Parameters
    ----------
    x : array_like (p,)
        Internal codes.
    model : FittedModel
    seed : int
        Master seed of the randomized rectangle probabilities (default:
        the model's seed). Every ``(slice, x)`` pair derives its own stream.
    budget : int
        Quasi-Monte Carlo points per rectangle probability.
    tol : float, optional
        Standard error target of the rectangle probabilities.

    Returns
    -------
    array (h,)

    """
    return np.exp(log_posterior_weights(x, model, seed=seed, budget=budget, tol=tol))


def _slice_moments(x, model, seed):
    backend = MOMENT_BACKENDS[model.backend]
    h = model.slices.h
    xs = np.repeat(x[None, :], h, axis=0)
    if model.backend == 'exact':
        seeds = [derive_seed(seed, s, *x) for s in range(h)]
        return backend(xs, model.slices.fbar, model.params, model.thresholds, seeds=seeds).m
    return backend(xs, model.slices.fbar, model.params, model.thresholds).m


def _conditional_mean_one(x, model, seed, budget):
    w = posterior_weights(x, model, seed=seed, budget=budget)
    return w @ _slice_moments(x, model, seed)


def _rows_apply(cb, x, model, seed, n_jobs, budget, width):
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if n_jobs == 1 or rows.shape[0] < 2:
        out = [cb(row, model, seed, budget) for row in rows]
    else:
        out = Parallel(n_jobs=n_jobs)(delayed(cb)(row, model, seed, budget) for row in rows)
    out = np.array(out, dtype=np.float64).reshape(rows.shape[0], width)
    return out[0] if single else out


def conditional_mean(x, model, seed=None, n_jobs=1, budget=2**12):
    """ ``E(Z | X = x)`` for one code vector (p,) or every row of (n, p) """
    x = _codes(x, model)
    seed = model.seed if seed is None else seed
    return _rows_apply(_conditional_mean_one, x, model, seed, n_jobs, budget, model.p)


def _reduce_one(x, model, seed, budget):
    return model.params.alpha.T @ _conditional_mean_one(x, model, seed, budget)


def reduce(x, model, seed=None, n_jobs=1, budget=2**12):
    """ Supervised reduction ``alpha^T E(Z | X = x)``

    Parameters
    ----------
    x : array_like (p,) or (n, p)
        Internal codes (use :meth:`FittedModel.encode` for original labels).
    model : FittedModel
    seed : int
        Default: the model's seed; the result is a pure function of
        ``(x, model, seed)``.
    n_jobs : int
        Parallel rows.
    budget : int

    Returns
    -------
    array (d,) or (n, d)

    """
    x = _codes(x, model)
    seed = model.seed if seed is None else seed
    return _rows_apply(_reduce_one, x, model, seed, n_jobs, budget, model.d)


ReductionResult = namedtuple('ReductionResult', 'r weights cache_stats')


class Reducer(object):
    """ Reduction with a least-recently-used cache keyed on the code vector

    Examples
    --------
    >>> from ordred.tests._designs import tiny_model
    >>> reducer = Reducer(tiny_model())
    >>> res = reducer([[1, 1], [1, 1], [2, 1]])
    >>> res.cache_stats['hits'], res.cache_stats['misses']
    (1, 2)

    """

    def __init__(self, model, seed=None, maxsize=2**16, budget=2**12, with_weights=False):
        self.model = model
        self.seed = model.seed if seed is None else seed
        self.budget = budget
        self.with_weights = with_weights
        self._cached = lru_cache(maxsize=maxsize)(self._compute)

    def _compute(self, key):
        x = np.array(key, dtype=np.int64)
        w = posterior_weights(x, self.model, seed=self.seed, budget=self.budget)
        r = self.model.params.alpha.T @ (w @ _slice_moments(x, self.model, self.seed))
        r.flags.writeable = False
        w.flags.writeable = False
        return r, w

    def cache_info(self):
        return self._cached.cache_info()

    def __call__(self, x):
        x = np.atleast_2d(_codes(x, self.model))
        out = [self._cached(tuple(int(v) for v in row)) for row in x]
        info = self.cache_info()
        stats = {'hits': info.hits, 'misses': info.misses, 'size': info.currsize}
        r = np.array([o[0] for o in out]).reshape(x.shape[0], self.model.d)
        weights = np.array([o[1] for o in out]) if self.with_weights else None
        return ReductionResult(r, weights, stats)


def index_orientation(r, y, categorical=False):
    """ +1 or -1 so that the oriented index correlates non-negatively with the response
    (with the rank of the response category when categorical) """
    y = np.asarray(y)
    if categorical:
        _, y = np.unique(y, return_inverse=True)
    y = np.asarray(y, dtype=np.float64).ravel()
    if np.ptp(y) == 0:
        return 1
    return -1 if np.corrcoef(r, y)[0, 1] < 0 else 1


def ses_index(data, model, seed=None, n_jobs=1, budget=2**12):
    """ One-dimensional reduction scaled to [0, 1] (socio-economic-status style index)

    Oriented so that it correlates non-negatively with the response, then
    min-max normalized over ``data``.

    Returns
    -------
    array (n,)

    """
    if model.d != 1:
        raise DimensionNotOne("An index needs a one-dimensional reduction (d=%d)" % model.d)
    r = reduce(data.x, model, seed=seed, n_jobs=n_jobs, budget=budget)
    return normalized_index(r, data.y, data.categorical)


def normalized_index(r, y, categorical=False):
    """ Orient a one-dimensional reduction along the response and rescale it to [0, 1]

    Examples
    --------
    >>> normalized_index([[3.0], [1.0], [2.0]], [0.1, 0.3, 0.2]).tolist()
    [0.0, 1.0, 0.5]

    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim == 2:
        if r.shape[1] != 1:
            raise DimensionNotOne("An index needs a one-dimensional reduction (d=%d)" % r.shape[1])
        r = r[:, 0]
    if not r.max() > r.min():
        raise ZeroVariance("The reduction is constant over the data")
    r = r*index_orientation(r, y, categorical)
    lo, hi = r.min(), r.max()
    return (r - lo)/(hi - lo)


class LookupTable(object):
    """ Reduction of every possible code vector, indexed by ``x - 1`` """

    def __init__(self, table):
        self.table = table

    @property
    def size_bytes(self):
        return self.table.nbytes

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.int64))
        return self.table[tuple((x - 1).T)]


class Refusal(object):
    """ A lookup table that would exceed the memory budget

    ``reducer`` is a cached :class:`Reducer` to use instead.
    """

    def __init__(self, size_bytes, budget, reducer):
        self.size_bytes = size_bytes
        self.budget = budget
        self.reducer = reducer

    def __repr__(self):
        return "Refusal(size_bytes=%d, budget=%d)" % (self.size_bytes, self.budget)


def table_size(g, d, itemsize=8):
    """ Bytes of a table with one ``d``-vector per code combination

    Examples
    --------
    >>> table_size([3]*20, 1)/2**30 > 25
    True

    """
    return math.prod(int(gj) for gj in g)*int(d)*itemsize


def tabulate(model, memory_budget=2**30, seed=None, n_jobs=1, budget=2**12):
    """ Precompute the reduction of every code combination when it fits in memory

    Returns
    -------
    LookupTable or Refusal

    """
    g = model.thresholds.g
    size = table_size(g, model.d)
    if size > memory_budget:
        logger.info("Lookup table needs %d bytes (budget %d), using a cache", size, memory_budget)
        return Refusal(size, memory_budget, Reducer(model, seed=seed, budget=budget))
    grid = np.array(list(itertools.product(*[range(1, gj + 1) for gj in g])), dtype=np.int64)
    values = reduce(grid, model, seed=seed, n_jobs=n_jobs, budget=budget)
    return LookupTable(values.reshape(tuple(g) + (model.d,)))
