# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import json

import numpy as np

from .model import (BasisSpec, ModelParams, ThresholdSet, encode_labels, equal_frequency_edges,
                    slice_index, _python_scalar)
from .util import ValidationError

SCHEMA = 'ordred.fitted_model'
SCHEMA_VERSION = 1


def _hex_array(a):
    a = np.asarray(a, dtype=np.float64)
    return {'shape': list(a.shape), 'data': [float(v).hex() for v in a.ravel()]}


def _unhex_array(doc):
    data = np.array([float.fromhex(v) for v in doc['data']], dtype=np.float64)
    return data.reshape(doc['shape'])


class SliceTable(object):
    """ Response slices used to mix the conditional expectations in a reduction

    Attributes
    ----------
    labels : tuple
        Category labels (categorical response) or slice numbers.
    edges : array
        Inner bin edges of a continuous response (empty when categorical).
    prior : array (h,)
        Training frequency of every slice.
    fbar : array (h, r)
        Mean centered basis row of every slice.

    """

    def __init__(self, labels, edges, prior, fbar):
        prior = np.asarray(prior, dtype=np.float64)
        if np.any(prior <= 0) or abs(prior.sum() - 1) > 1e-12:
            raise ValidationError("Slice frequencies must be positive and sum to one")
        self.labels = tuple(labels)
        self.edges = np.asarray(edges, dtype=np.float64)
        self.prior = prior
        self.fbar = np.atleast_2d(np.asarray(fbar, dtype=np.float64))

    @property
    def h(self):
        return self.prior.size

    @classmethod
    def from_response(cls, y, basis, h=10, categorical=False):
        """ Slices of the training response: categories, or ``h`` equal-frequency bins """
        y = np.asarray(y)
        if categorical:
            labels, idx = np.unique(y, return_inverse=True)
            labels = tuple(_python_scalar(v) for v in labels)
            edges = np.zeros(0)
        else:
            edges = equal_frequency_edges(y, min(int(h), y.size))
            used, idx = np.unique(slice_index(y, edges), return_inverse=True)
            labels = tuple(range(1, used.size + 1))
        idx = np.asarray(idx).ravel()
        prior = np.bincount(idx)/idx.size
        fbar = np.array([basis.F[idx == s].mean(axis=0) for s in range(prior.size)])
        return cls(labels, edges, prior, fbar)

    def to_dict(self):
        return {'labels': list(self.labels), 'edges': _hex_array(self.edges),
                'prior': _hex_array(self.prior), 'fbar': _hex_array(self.fbar)}

    @classmethod
    def from_dict(cls, d):
        return cls(d['labels'], _unhex_array(d['edges']), _unhex_array(d['prior']), _unhex_array(d['fbar']))


class FittedModel(object):
    """ Converged estimate of the ordinal inverse regression model

    Parameters
    ----------
    params : ModelParams
    thresholds : ThresholdSet
    basis : BasisSpec
        Resolved basis specification (slice count filled in).
    q_trace : sequence of float
        EM objective path ending at the final Q, see :func:`ordred.em.em_trace`.
    converged : bool
    iterations : int
    backend : str
    seed : int
    slices : SliceTable
    names : tuple of str
        Predictor names.
    levels : tuple of tuples
        Original labels per code and predictor.
    merges : dict
        Per predictor: unobserved label -> label it was merged into.
    lam : float or None
        Group-lasso penalty of the fit.
    response_name, response_kind : str
    info : dict
        Diagnostics that are not persisted (timings, lambda_max ...).

    """

    def __init__(self, params, thresholds, basis, q_trace, converged, iterations, backend, seed,
                 slices, names, levels, merges=None, lam=None, response_name='y',
                 response_kind='continuous', info=None):
        q_trace = tuple(float(q) for q in q_trace)
        if converged and not q_trace:
            raise ValidationError("A converged model needs a non-empty Q trace")
        if len(thresholds) != params.p or len(names) != params.p:
            raise ValidationError("Thresholds/names do not match p=%d" % params.p)
        if params.r != slices.fbar.shape[1]:
            raise ValidationError("Slice table does not match r=%d" % params.r)
        self.params = params
        self.thresholds = thresholds
        self.basis = basis
        self.q_trace = q_trace
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.backend = backend
        self.seed = int(seed)
        self.slices = slices
        self.names = tuple(names)
        self.levels = tuple(tuple(lv) for lv in levels)
        self.merges = {k: dict(v) for k, v in (merges or {}).items() if v}
        self.lam = None if lam is None else float(lam)
        self.response_name = response_name
        self.response_kind = response_kind
        self.info = info or {}

    @property
    def d(self):
        return self.params.d

    @property
    def p(self):
        return self.params.p

    @property
    def q(self):
        """ Final Q value """
        return self.q_trace[-1]

    @property
    def active_set(self):
        """ Predictors with a non-zero row in alpha """
        return tuple(int(j) for j in np.flatnonzero(np.any(self.params.alpha != 0, axis=1)))

    def encode(self, labels):
        """ Internal codes of out-of-sample rows given in original labels """
        return encode_labels(labels, self.names, self.levels, self.merges)

    def with_alpha(self, alpha, xi):
        """ Copy with another basis of the reduction subspace (used for rotation checks) """
        params = ModelParams(self.params.delta, alpha, xi)
        return FittedModel(params, self.thresholds, self.basis, self.q_trace, self.converged,
                           self.iterations, self.backend, self.seed, self.slices, self.names,
                           self.levels, self.merges, self.lam, self.response_name,
                           self.response_kind, dict(self.info))

    def to_dict(self):
        return {
            'schema': SCHEMA,
            'version': SCHEMA_VERSION,
            'params': {'delta': _hex_array(self.params.delta), 'alpha': _hex_array(self.params.alpha),
                       'xi': _hex_array(self.params.xi)},
            'thresholds': [_hex_array(c) for c in self.thresholds.cuts],
            'basis': self.basis.to_dict(),
            'q_trace': _hex_array(self.q_trace),
            'converged': self.converged,
            'iterations': self.iterations,
            'backend': self.backend,
            'seed': self.seed,
            'slices': self.slices.to_dict(),
            'predictors': {
                'names': list(self.names),
                'levels': [list(lv) for lv in self.levels],
                'merges': {k: sorted(([lab, tgt] for lab, tgt in v.items()), key=repr)
                           for k, v in self.merges.items()},
            },
            'response': {'name': self.response_name, 'kind': self.response_kind},
            'lambda': None if self.lam is None else float(self.lam).hex(),
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get('schema') != SCHEMA:
            raise ValidationError("Not a fitted model document (schema=%r)" % doc.get('schema'))
        if not isinstance(doc.get('version'), int) or doc['version'] > SCHEMA_VERSION:
            raise ValidationError("Unsupported model document version: %r" % doc.get('version'))
        pr = doc['params']
        params = ModelParams(_unhex_array(pr['delta']), _unhex_array(pr['alpha']), _unhex_array(pr['xi']))
        preds = doc['predictors']
        merges = {k: {lab: tgt for lab, tgt in v} for k, v in preds['merges'].items()}
        return cls(params, ThresholdSet([_unhex_array(c) for c in doc['thresholds']]),
                   BasisSpec.from_dict(doc['basis']), _unhex_array(doc['q_trace']).tolist(),
                   doc['converged'], doc['iterations'], doc['backend'], doc['seed'],
                   SliceTable.from_dict(doc['slices']), preds['names'], preds['levels'], merges,
                   None if doc['lambda'] is None else float.fromhex(doc['lambda']),
                   doc['response']['name'], doc['response']['kind'])

    def to_json(self):
        """ Versioned JSON document, floats as hexadecimal strings (lossless) """
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + '\n'

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except ValueError as e:
            raise ValidationError("Model file is not valid JSON: %s" % e)
        try:
            return cls.from_dict(doc)
        except (KeyError, TypeError) as e:
            raise ValidationError("Malformed model document: %r" % e)

    def __repr__(self):
        return "FittedModel(p=%d, d=%d, iterations=%d, converged=%s, backend=%s)" % (
            self.p, self.d, self.iterations, self.converged, self.backend)
