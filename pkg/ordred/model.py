# -*- coding: utf-8 -*-
"""
Domain types: ordinal datasets, thresholds, model parameters and the
response basis.

Internal category codes are always ``1..G_j``; the original labels are
kept alongside so that reports and out-of-sample encoding can map back
and forth.
"""
from __future__ import (absolute_import, division, print_function)

import math

import numpy as np
import pandas as pd

from .util import NumericalError, ValidationError


class NonOrdinalColumn(ValidationError):
    """ A predictor with fewer than two observed levels """

    def __init__(self, msg, column=None):
        super(NonOrdinalColumn, self).__init__(msg)
        self.column = column


class MissingValue(ValidationError):

    def __init__(self, msg, column=None):
        super(MissingValue, self).__init__(msg)
        self.column = column


class UnknownColumn(ValidationError):

    def __init__(self, msg, column=None):
        super(UnknownColumn, self).__init__(msg)
        self.column = column


class InvalidSlice(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class DegenerateBasis(NumericalError):
    pass


def _python_scalar(value):
    return value.item() if isinstance(value, np.generic) else value


def _is_numeric(values):
    return np.asarray(values).dtype.kind in 'biuf'


def _readonly(arr):
    arr.flags.writeable = False
    return arr


def _nearest_observed(k, observed_idx):
    """ Index of the observed level closest to ``k`` (ties go to the lower one) """
    best = None
    for o in observed_idx:
        if best is None or abs(o - k) < abs(best - k):
            best = o
    return best


def _recode_column(values, name, declared=None):
    """ Map labels of one predictor to codes ``1..G`` preserving their order

    Returns
    -------
    codes : int array
    labels : tuple
        ``labels[c - 1]`` is the label of code ``c``.
    merges : dict
        Declared-but-unobserved label -> observed label it was merged into.
    """
    values = np.asarray(values, dtype=object)
    if pd.isna(values).any():
        raise MissingValue("Column %r has missing values" % name, column=name)
    values = np.array([_python_scalar(v) for v in values], dtype=object)
    merges = {}
    if declared is not None:
        declared = [_python_scalar(v) for v in declared]
        position = {lab: k for k, lab in enumerate(declared)}
        if len(position) != len(declared):
            raise ValidationError("Duplicate levels declared for column %r" % name)
        unknown = set(values) - set(position)
        if unknown:
            raise ValidationError("Column %r has undeclared levels: %s" % (
                name, ', '.join(sorted(map(repr, unknown)))))
        present = set(values)
        observed_idx = [k for k, lab in enumerate(declared) if lab in present]
        for k, lab in enumerate(declared):
            if lab not in present and observed_idx:
                merges[lab] = declared[_nearest_observed(k, observed_idx)]
        labels = tuple(declared[k] for k in observed_idx)
    else:
        if not _is_numeric(values.tolist()):
            raise ValidationError("Labels of column %r are not numeric, declare their order with 'levels'" % name)
        labels = tuple(_python_scalar(v) for v in np.unique(values.astype(np.float64)))
        labels = tuple(int(v) if float(v).is_integer() else v for v in labels)
    if len(labels) < 2:
        raise NonOrdinalColumn("Column %r has fewer than 2 levels" % name, column=name)
    code_of = {lab: c for c, lab in enumerate(labels, 1)}
    for lab, target in merges.items():
        code_of[lab] = code_of[target]
    codes = np.array([code_of[v] for v in values], dtype=np.int64)
    return codes, labels, merges


class OrdinalDataset(object):
    """ Sample of ordinal predictors and a response

    Parameters
    ----------
    x : array_like (n, p)
        Internal codes, column ``j`` must take exactly the values ``1..G_j``.
        Use :meth:`from_codes` or :func:`validate_dataset` to recode arbitrary
        ordered labels.
    y : array_like (n,)
        Response, real (continuous) or labels (categorical).
    names : sequence of str
        Predictor names (default: ``X1..Xp``).
    levels : sequence of tuples
        Original label of every code per predictor (default: the codes).
    merges : dict
        Per predictor name: unobserved label -> label it was merged into.
    response_name : str
    response_kind : str
        'continuous' or 'categorical' (default: inferred from ``y``'s dtype).

    """

    def __init__(self, x, y, names=None, levels=None, merges=None, response_name='y',
                 response_kind=None):
        x = np.array(x, dtype=np.int64)
        if x.ndim != 2:
            raise ValidationError("x must be two dimensional")
        n, p = x.shape
        if n < 2 or p < 1:
            raise ValidationError("Need n >= 2 and p >= 1 (got n=%d, p=%d)" % (n, p))
        names = tuple(names) if names is not None else tuple('X%d' % (j + 1) for j in range(p))
        if len(names) != p:
            raise ValidationError("Got %d names for %d predictors" % (len(names), p))
        g = x.max(axis=0)
        for j in range(p):
            if g[j] < 2:
                raise NonOrdinalColumn("Column %r has fewer than 2 levels" % names[j], column=names[j])
            if x[:, j].min() != 1 or len(np.unique(x[:, j])) != g[j]:
                raise ValidationError("Codes of column %r are not contiguous 1..G" % names[j])
        y = np.asarray(y)
        if y.ndim != 1 or y.size != n:
            raise ValidationError("y must have length n=%d" % n)
        if pd.isna(y).any():
            raise MissingValue("Response %r has missing values" % response_name, column=response_name)
        if response_kind is None:
            response_kind = 'continuous' if _is_numeric(y) else 'categorical'
        if response_kind not in ('continuous', 'categorical'):
            raise ValidationError("Unknown response kind: %s" % response_kind)
        if response_kind == 'continuous':
            if not _is_numeric(y):
                raise ValidationError("A continuous response must be numeric")
            y = y.astype(np.float64)
        if levels is None:
            levels = tuple(tuple(range(1, gj + 1)) for gj in g)
        levels = tuple(tuple(lv) for lv in levels)
        if [len(lv) for lv in levels] != list(g):
            raise ValidationError("levels do not match the number of codes per column")
        self.x = _readonly(x)
        self.y = _readonly(y.copy())
        self.g = _readonly(g)
        self.names = names
        self.levels = levels
        self.merges = {k: dict(v) for k, v in (merges or {}).items() if v}
        self.response_name = response_name
        self.response_kind = response_kind

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    @property
    def categorical(self):
        return self.response_kind == 'categorical'

    @property
    def n_thresholds(self):
        return int(np.sum(self.g - 1))

    @classmethod
    def from_codes(cls, x, y, names=None, levels=None, merges=None, **kwargs):
        """ Build a dataset from arbitrary ordered labels, recoding each column

        Parameters
        ----------
        x : array_like (n, p)
            Labels; numeric labels are ordered numerically, others need ``levels``.
        levels : sequence (optional)
            Declared ordered labels per column (``None`` entries allowed).
        merges : dict (optional)
            Merges recorded upstream, composed with the ones found here.
        \\*\\*kwargs :
            Passed on to :class:`OrdinalDataset`.

        """
        x = np.asarray(x, dtype=object)
        if x.ndim != 2:
            raise ValidationError("x must be two dimensional")
        p = x.shape[1]
        names = tuple(names) if names is not None else tuple('X%d' % (j + 1) for j in range(p))
        declared = list(levels) if levels is not None else [None]*p
        codes, labels, all_merges = [], [], {}
        for j, name in enumerate(names):
            c, lab, mrg = _recode_column(x[:, j], name, declared[j])
            upstream = (merges or {}).get(name, {})
            composed = {k: mrg.get(v, v) for k, v in upstream.items()}
            composed.update(mrg)
            codes.append(c)
            labels.append(lab)
            all_merges[name] = composed
        return cls(np.column_stack(codes), y, names=names, levels=labels, merges=all_merges, **kwargs)

    def labels_of(self, codes):
        """ Original labels (object array) for a matrix of internal codes """
        codes = np.atleast_2d(codes)
        out = np.empty(codes.shape, dtype=object)
        for j, lv in enumerate(self.levels):
            out[:, j] = [lv[c - 1] for c in codes[:, j]]
        return out

    def encode(self, labels):
        """ Internal codes for a matrix of original labels (merges honoured) """
        return encode_labels(labels, self.names, self.levels, self.merges)

    def take(self, rows):
        """ Sub-sample, recoded so that every column again uses ``1..G_j`` """
        rows = np.asarray(rows)
        return OrdinalDataset.from_codes(
            self.labels_of(self.x[rows]), self.y[rows], names=self.names, levels=self.levels,
            merges=self.merges, response_name=self.response_name, response_kind=self.response_kind)

    def __repr__(self):
        return "OrdinalDataset(n=%d, p=%d, g=%s, response=%s)" % (
            self.n, self.p, list(self.g), self.response_kind)


def encode_labels(labels, names, levels, merges=None):
    """ Map a matrix of labels onto internal codes given per-column level tuples """
    labels = np.atleast_2d(np.asarray(labels, dtype=object))
    if labels.shape[1] != len(levels):
        raise ValidationError("Expected %d predictor columns, got %d" % (len(levels), labels.shape[1]))
    codes = np.empty(labels.shape, dtype=np.int64)
    for j, (name, lv) in enumerate(zip(names, levels)):
        code_of = {lab: c for c, lab in enumerate(lv, 1)}
        for lab, target in (merges or {}).get(name, {}).items():
            code_of[lab] = code_of[target]
        for i, v in enumerate(labels[:, j]):
            v = _python_scalar(v)
            if pd.isna(v):
                raise MissingValue("Column %r has missing values" % name, column=name)
            try:
                codes[i, j] = code_of[v]
            except KeyError:
                raise ValidationError("Unknown level %r in column %r" % (v, name))
    return codes


_schema_keys = ('response', 'predictors', 'response_kind', 'levels')


def validate_dataset(table, schema):
    """ Validate a parsed table and build an :class:`OrdinalDataset`

    Parameters
    ----------
    table : pandas.DataFrame
    schema : dict
        'response' (required), 'predictors' (default: every other column),
        'response_kind', 'levels' (column -> ordered labels).

    Examples
    --------
    >>> import pandas as pd
    >>> df = pd.DataFrame({'a': [10, 20, 20, 30], 'y': [0.1, 0.5, 0.3, 0.2]})
    >>> validate_dataset(df, {'response': 'y'}).x[:, 0].tolist()
    [1, 2, 2, 3]

    """
    unknown = set(schema) - set(_schema_keys)
    if unknown:
        raise ValidationError("Unknown schema keys: %s" % ', '.join(sorted(unknown)))
    response = schema.get('response')
    if response is None:
        raise ValidationError("No response column declared")
    if response not in table.columns:
        raise UnknownColumn("Unknown response column %r" % response, column=response)
    predictors = schema.get('predictors')
    if predictors is None:
        predictors = [c for c in table.columns if c != response]
    for name in predictors:
        if name not in table.columns:
            raise UnknownColumn("Unknown predictor column %r" % name, column=name)
        if name == response:
            raise ValidationError("Column %r is both response and predictor" % name)
    if len(predictors) == 0:
        raise ValidationError("No predictor columns")
    levels = schema.get('levels') or {}
    for name in levels:
        if name not in predictors:
            raise UnknownColumn("Levels declared for unknown predictor %r" % name, column=name)
    y = table[response].to_numpy()
    if pd.isna(y).any():
        raise MissingValue("Response %r has missing values" % response, column=response)
    return OrdinalDataset.from_codes(
        table[list(predictors)].to_numpy(dtype=object), y, names=[str(c) for c in predictors],
        levels=[levels.get(name) for name in predictors], response_name=str(response),
        response_kind=schema.get('response_kind'))


class ThresholdSet(object):
    """ Strictly increasing cut points per predictor

    The sentinels ``-inf``/``+inf`` are implicit: code ``c`` of predictor ``j``
    corresponds to the cell ``[cuts[j][c-2], cuts[j][c-1])``.
    """

    def __init__(self, cuts):
        cuts = [np.array(c, dtype=np.float64).ravel() for c in cuts]
        for j, c in enumerate(cuts):
            if c.size == 0:
                raise ValidationError("Predictor %d has no cut points" % j)
            if not np.all(np.isfinite(c)):
                raise ValidationError("Non-finite cut point for predictor %d" % j)
            if np.any(np.diff(c) <= 0):
                raise ValidationError("Cut points of predictor %d are not strictly increasing" % j)
            _readonly(c)
        self.cuts = tuple(cuts)

    def __len__(self):
        return len(self.cuts)

    def __getitem__(self, j):
        return self.cuts[j]

    @property
    def g(self):
        return np.array([c.size + 1 for c in self.cuts])

    def bounds(self, j):
        return np.concatenate(([-np.inf], self.cuts[j], [np.inf]))

    def cell(self, x):
        """ Lower and upper cell bounds for codes ``x`` of shape (p,) or (n, p) """
        x = np.asarray(x)
        if x.shape[-1] != len(self.cuts):
            raise ValidationError("Expected %d codes per row" % len(self.cuts))
        lower = np.empty(x.shape)
        upper = np.empty(x.shape)
        for j in range(len(self.cuts)):
            b = self.bounds(j)
            xj = x[..., j]
            if np.any(xj < 1) or np.any(xj > b.size - 1):
                raise ValidationError("Code out of range for predictor %d" % j)
            lower[..., j] = b[xj - 1]
            upper[..., j] = b[xj]
        return lower, upper

    def __eq__(self, other):
        return isinstance(other, ThresholdSet) and len(self) == len(other) and all(
            np.array_equal(a, b) for a, b in zip(self.cuts, other.cuts))

    def __repr__(self):
        return "ThresholdSet(%s)" % [c.tolist() for c in self.cuts]


class ModelParams(object):
    """ Parameters (Delta, alpha, xi) of the latent inverse regression

    ``Z | Y ~ N(Delta alpha xi fbar_Y, Delta)`` with ``alpha^T alpha = I_d``.

    Parameters
    ----------
    delta : array_like (p, p)
    alpha : array_like (p, d)
    xi : array_like (d, r)
    strict : bool (default: True)
        Require the unit diagonal of ``delta``. The raw M-step optimum is
        built with ``strict=False`` before rescaling.

    """

    atol = 1e-10

    def __init__(self, delta, alpha, xi, strict=True):
        delta = np.array(delta, dtype=np.float64)
        alpha = np.array(alpha, dtype=np.float64)
        xi = np.array(xi, dtype=np.float64)
        p = delta.shape[0]
        if delta.shape != (p, p):
            raise InvalidParams("delta must be square")
        if alpha.ndim != 2 or alpha.shape[0] != p:
            raise InvalidParams("alpha must have %d rows" % p)
        d = alpha.shape[1]
        if xi.ndim != 2 or xi.shape[0] != d:
            raise InvalidParams("xi must have %d rows" % d)
        r = xi.shape[1]
        if d > min(r, p):
            raise InvalidParams("d=%d exceeds min(r, p)=%d" % (d, min(r, p)))
        scale = max(1.0, np.abs(delta).max())
        if np.abs(delta - delta.T).max() > self.atol*scale:
            raise InvalidParams("delta is not symmetric")
        if np.linalg.eigvalsh(delta)[0] <= 0:
            raise InvalidParams("delta is not positive definite")
        if strict and np.abs(np.diag(delta) - 1).max() > self.atol:
            raise InvalidParams("delta does not have a unit diagonal")
        if d > 0 and np.abs(alpha.T @ alpha - np.eye(d)).max() > self.atol:
            raise InvalidParams("alpha is not semi-orthogonal")
        self.delta = _readonly(delta)
        self.alpha = _readonly(alpha)
        self.xi = _readonly(xi)
        self.strict = strict

    @property
    def p(self):
        return self.delta.shape[0]

    @property
    def d(self):
        return self.alpha.shape[1]

    @property
    def r(self):
        return self.xi.shape[1]

    @property
    def psi(self):
        """ Psi = Delta alpha xi (p x r), the mean coefficient of Z | Y """
        return self.delta @ self.alpha @ self.xi

    @property
    def precision(self):
        return np.linalg.inv(self.delta)

    @property
    def xi_full_rank(self):
        if self.d == 0:
            return True
        s = np.linalg.svd(self.xi, compute_uv=False)
        return s[-1] > 1e-10*s[0]

    def rotated(self, o):
        """ Same model with ``alpha -> alpha o`` and ``xi -> o^T xi`` for orthogonal ``o`` """
        o = np.asarray(o)
        return ModelParams(self.delta, self.alpha @ o, o.T @ self.xi, strict=self.strict)

    def __repr__(self):
        return "ModelParams(p=%d, d=%d, r=%d)" % (self.p, self.d, self.r)


class BasisSpec(object):
    """ Specification of the fitting functions f_Y

    Examples
    --------
    >>> BasisSpec.polynomial(2).r
    2
    >>> BasisSpec.slices(4).r
    3

    """

    kinds = ('polynomial', 'slices')

    def __init__(self, kind, degree=None, h=None):
        if kind not in self.kinds:
            raise ValidationError("Unknown basis kind: %s" % kind)
        if kind == 'polynomial':
            if degree is None or int(degree) != degree or degree < 1:
                raise ValidationError("Polynomial degree must be an integer >= 1")
            degree, h = int(degree), None
        else:
            if h is not None and (int(h) != h or h < 2):
                raise ValidationError("Slice count must be an integer >= 2")
            degree, h = None, (None if h is None else int(h))
        self.kind = kind
        self.degree = degree
        self.h = h

    @classmethod
    def polynomial(cls, degree):
        return cls('polynomial', degree=degree)

    @classmethod
    def slices(cls, h=None):
        return cls('slices', h=h)

    @property
    def r(self):
        if self.kind == 'polynomial':
            return self.degree
        return None if self.h is None else self.h - 1

    def to_dict(self):
        return {'kind': self.kind, 'degree': self.degree, 'h': self.h}

    @classmethod
    def from_dict(cls, d):
        return cls(d['kind'], degree=d.get('degree'), h=d.get('h'))

    def __eq__(self, other):
        return isinstance(other, BasisSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        if self.kind == 'polynomial':
            return "BasisSpec.polynomial(%d)" % self.degree
        return "BasisSpec.slices(%s)" % self.h


def equal_frequency_edges(y, h):
    """ Inner edges of ``h`` equal-frequency bins of ``y`` """
    ys = np.sort(np.asarray(y, dtype=np.float64))
    n = ys.size
    return np.array([ys[int(math.ceil(k*n/h)) - 1] for k in range(1, h)])


def slice_index(y, edges):
    """ Bin of each value, ties to the lower bin """
    return np.searchsorted(edges, np.asarray(y, dtype=np.float64), side='left')


class BasisMatrix(object):
    """ Centered basis matrix F (rows ``f_{y_i} - mean(f_y)``) with the state
    needed to evaluate the basis for other responses. """

    def __init__(self, F, spec, center, edges=None, categories=None):
        self.F = _readonly(np.asarray(F, dtype=np.float64))
        self.spec = spec
        self.center = _readonly(np.asarray(center, dtype=np.float64))
        self.edges = None if edges is None else _readonly(np.asarray(edges, dtype=np.float64))
        self.categories = None if categories is None else tuple(categories)

    @property
    def n(self):
        return self.F.shape[0]

    @property
    def r(self):
        return self.F.shape[1]

    def raw(self, y):
        """ Uncentered basis rows f_y """
        if self.spec.kind == 'polynomial':
            y = np.asarray(y, dtype=np.float64)
            return y[:, None]**np.arange(1, self.spec.degree + 1)
        if self.categories is not None:
            pos = {c: k for k, c in enumerate(self.categories)}
            try:
                idx = np.array([pos[_python_scalar(v)] for v in np.asarray(y, dtype=object)])
            except KeyError as e:
                raise ValidationError("Unknown response category: %r" % e.args[0])
        else:
            idx = slice_index(y, self.edges)
        return np.eye(self.spec.h)[idx, :self.spec.h - 1]

    def evaluate(self, y):
        """ Centered basis rows for (possibly new) responses """
        return self.raw(y) - self.center


def build_basis(y, spec, categorical=None):
    """ Centered n x r basis matrix of a response

    Parameters
    ----------
    y : array_like (n,)
    spec : BasisSpec
    categorical : bool
        Treat ``y`` as category labels (one slice per category). Default:
        non-numeric ``y``, or numeric ``y`` with an unset slice count.

    Examples
    --------
    >>> build_basis([1, 2, 3, 4], BasisSpec.polynomial(1)).F.ravel().tolist()
    [-1.5, -0.5, 0.5, 1.5]

    """
    y = np.asarray(y)
    n = y.size
    if n < 2:
        raise ValidationError("Need at least two observations")
    edges = categories = None
    if spec.kind == 'polynomial':
        if not _is_numeric(y):
            raise ValidationError("A polynomial basis needs a numeric response")
        basis = BasisMatrix(np.empty((n, spec.degree)), spec, np.zeros(spec.degree))
        f = basis.raw(y)
    else:
        if categorical is None:
            categorical = not _is_numeric(y) or spec.h is None
        if categorical:
            categories = tuple(_python_scalar(v) for v in np.unique(y))
            if spec.h is not None and spec.h != len(categories):
                raise InvalidSlice("Got %d categories for %d slices" % (len(categories), spec.h))
            if len(categories) < 2:
                raise InvalidSlice("Need at least two response categories")
            spec = BasisSpec.slices(len(categories))
        else:
            if spec.h > n:
                raise InvalidSlice("More slices (%d) than observations (%d)" % (spec.h, n))
            edges = equal_frequency_edges(y, spec.h)
            counts = np.bincount(slice_index(y, edges), minlength=spec.h)
            if np.any(counts == 0):
                raise InvalidSlice("Slice %d is empty (ties in y)" % int(np.argmin(counts)))
        basis = BasisMatrix(np.empty((n, spec.h - 1)), spec, np.zeros(spec.h - 1),
                            edges=edges, categories=categories)
        f = basis.raw(y)
    center = f.mean(axis=0)
    F = f - center
    s = np.linalg.svd(F, compute_uv=False)
    if s[0] == 0 or s[-1] <= 1e-10*s[0]:
        raise DegenerateBasis("F^T F is singular")
    return BasisMatrix(F, spec, center, edges=edges, categories=categories)
