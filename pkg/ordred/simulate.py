# -*- coding: utf-8 -*-
"""
Synthetic data from the ordinal latent inverse regression model and the
metrics used to assess estimates against the ground truth.
"""
from __future__ import (absolute_import, division, print_function)

import math

import numpy as np
from scipy.linalg import subspace_angles
from scipy.spatial.distance import pdist, squareform

from .model import OrdinalDataset, ThresholdSet
from .util import NumericalError, ValidationError, derive_seed, import_, orthonormalize

Parallel, delayed = import_('joblib', 'Parallel', 'delayed')


class RankDeficient(NumericalError):
    pass


class DegenerateSample(NumericalError):
    pass


_block_A = np.array([[.5, -.5], [.5, .5], [.5, .5], [.5, -.5]])


def _padded_block(p):
    alpha = np.zeros((p, 2))
    alpha[:4] = _block_A
    return alpha


class SimDesign(object):
    """ Parameters of a simulation design

    Parameters
    ----------
    n, p, d, r : int
    alpha_rule : str
        'ones-signs': ``sqrt(p) alpha = (1_p, sign(e_1), ...)`` with
        ``e_k ~ N(0, I)``; 'explicit': the matrix given as ``alpha``.
    alpha : array_like (p, d), optional
    c, rho : float
        ``Delta = c I + rho alpha B alpha^T`` with ``B = G G^T / d``.
    b_seed : int
        Seed of the fixed design quantities (``e``, ``B``, level counts).
    error_kind : str
        'normal' or 'chi2' (centered and scaled chi-square(5) coordinates).
    g : int, sequence of int or (lo, hi) range
        Levels per predictor; a ``range`` draws them uniformly in ``lo..hi``.
    threshold_rule : str
        'quantile': equal-probability cuts of the latent marginals
        (estimated once from an auxiliary draw); 'sample': equal-frequency
        cuts of every generated sample.
    seed : int
        Seed of the sample.
    response : str
        'normal' (``Y ~ N(0, 1)``, polynomial basis), 'classes' (balanced
        categories, slice basis, ``r = n_classes - 1``) or 'lognormal'
        (``Y = exp(U)`` with a polynomial basis in ``U``).
    xi_scale : float
        ``xi = xi_scale [I_d 0]``.
    n_classes : int

    """

    presets = {
        'validate-estep': dict(n=100, p=5, d=2, r=2, g=4, xi_scale=1.5),
        'angle-comparison': dict(n=500, p=20, d=2, r=2, g=range(3, 6), xi_scale=1.5),
        'choose-d': dict(n=300, p=10, d=2, r=4, g=range(3, 6)),
        'variable-selection': dict(n=500, p=20, d=2, r=2, alpha_rule='explicit', c=4.0, rho=0.0,
                                   g=range(3, 6)),
        'three-class': dict(n=300, p=6, d=2, r=2, response='classes', n_classes=3, g=4),
        'income': dict(n=500, p=8, d=1, r=2, response='lognormal', g=range(3, 6)),
    }

    _keys = ('n', 'p', 'd', 'r', 'alpha_rule', 'alpha', 'c', 'rho', 'b_seed', 'error_kind', 'g',
             'threshold_rule', 'seed', 'response', 'xi_scale', 'n_classes')

    def __init__(self, n=100, p=5, d=2, r=2, alpha_rule='ones-signs', alpha=None, c=1.0, rho=1.0,
                 b_seed=0, error_kind='normal', g=4, threshold_rule='quantile', seed=0,
                 response='normal', xi_scale=1.0, n_classes=3):
        if n < 4 or p < 1 or d < 0 or r < 1 or d > min(r, p):
            raise ValidationError("Invalid sizes n=%d, p=%d, d=%d, r=%d" % (n, p, d, r))
        if alpha_rule not in ('ones-signs', 'explicit'):
            raise ValidationError("Unknown alpha rule: %s" % alpha_rule)
        if alpha_rule == 'explicit':
            alpha = _padded_block(p) if alpha is None else np.array(alpha, dtype=np.float64)
            if alpha.shape != (p, d):
                raise ValidationError("alpha must be %d x %d" % (p, d))
        if not c > 0 or rho < 0:
            raise ValidationError("Need c > 0 and rho >= 0")
        if error_kind not in ('normal', 'chi2'):
            raise ValidationError("Unknown error kind: %s" % error_kind)
        if threshold_rule not in ('quantile', 'sample'):
            raise ValidationError("Unknown threshold rule: %s" % threshold_rule)
        if response not in ('normal', 'classes', 'lognormal'):
            raise ValidationError("Unknown response: %s" % response)
        if response == 'classes' and r != n_classes - 1:
            raise ValidationError("A class response needs r = n_classes - 1")
        if isinstance(g, tuple) and len(g) == 2:
            g = range(g[0], g[1] + 1)
        if isinstance(g, range):
            if len(g) == 0 or g.start < 2:
                raise ValidationError("Level range must lie in 2, 3, ...")
        elif np.ndim(g) == 0:
            if g < 2:
                raise ValidationError("Need at least 2 levels")
        elif len(g) != p or min(g) < 2:
            raise ValidationError("Need p level counts >= 2")
        self.n, self.p, self.d, self.r = int(n), int(p), int(d), int(r)
        self.alpha_rule = alpha_rule
        self.alpha = alpha
        self.c, self.rho = float(c), float(rho)
        self.b_seed = int(b_seed)
        self.error_kind = error_kind
        self.g = g
        self.threshold_rule = threshold_rule
        self.seed = int(seed)
        self.response = response
        self.xi_scale = float(xi_scale)
        self.n_classes = int(n_classes)

    @classmethod
    def preset(cls, name, **overrides):
        try:
            kw = dict(cls.presets[name])
        except KeyError:
            raise ValidationError("Unknown design: %s (choose from %s)" % (name, ', '.join(sorted(cls.presets))))
        kw.update(overrides)
        return cls(**kw)

    @classmethod
    def from_dict(cls, d):
        """ Design from a (config file) mapping; 'preset' names the base design """
        d = dict(d)
        unknown = set(d) - set(cls._keys) - {'preset'}
        if unknown:
            raise ValidationError("Unknown design keys: %s" % ', '.join(sorted(unknown)))
        if isinstance(d.get('g'), list) and len(d['g']) == 2 and d.get('p') != 2:
            d['g'] = range(d['g'][0], d['g'][1] + 1)
        name = d.pop('preset', None)
        return cls.preset(name, **d) if name else cls(**d)

    def replace(self, **kw):
        current = {k: getattr(self, k) for k in self._keys}
        current.update(kw)
        return SimDesign(**current)

    def to_dict(self):
        out = {k: getattr(self, k) for k in self._keys}
        if isinstance(self.g, range):
            out['g'] = [self.g.start, self.g.stop - 1]
        elif np.ndim(self.g):
            out['g'] = [int(v) for v in self.g]
        out['alpha'] = None if self.alpha is None else np.asarray(self.alpha).tolist()
        return out

    def __repr__(self):
        return "SimDesign(n=%d, p=%d, d=%d, r=%d, seed=%d)" % (self.n, self.p, self.d, self.r, self.seed)


class GroundTruth(object):
    """ Population quantities of a generated sample, on the latent scale with
    unit conditional variances

    Attributes
    ----------
    alpha : array (p, d)
    delta : array (p, p)
    xi : array (d, r)
    z : array (n, p)
        Latent sample.
    thresholds : ThresholdSet
    active : tuple of int
        Predictors with a non-zero row in alpha.

    """

    def __init__(self, alpha, delta, xi, z, thresholds, active):
        self.alpha = alpha
        self.delta = delta
        self.xi = xi
        self.z = z
        self.thresholds = thresholds
        self.active = active

    @property
    def reduction(self):
        """ ``alpha^T z``, the sufficient reduction of the latent sample """
        return self.z @ self.alpha


def _ones_signs(p, d, rng):
    while True:
        cols = [np.ones(p)] + [np.sign(rng.standard_normal(p)) for _ in range(d - 1)]
        a = np.column_stack(cols)[:, :d]/math.sqrt(p)
        if np.linalg.matrix_rank(a) == d:
            return orthonormalize(a)


def _level_counts(design, rng):
    g = design.g
    if isinstance(g, range):
        return rng.integers(g.start, g.stop, size=design.p)
    if np.ndim(g) == 0:
        return np.full(design.p, int(g))
    return np.asarray(g, dtype=np.int64)


class _Population(object):

    def __init__(self, design):
        rng = np.random.default_rng(design.b_seed)
        p, d = design.p, design.d
        if design.alpha_rule == 'ones-signs':
            alpha = _ones_signs(p, d, rng) if d else np.zeros((p, 0))
        else:
            alpha = orthonormalize(design.alpha)
        G = rng.standard_normal((d, d))
        B = G @ G.T/max(d, 1)
        self.delta = design.c*np.eye(p) + design.rho*alpha @ B @ alpha.T
        self.alpha = alpha
        self.xi = design.xi_scale*np.eye(d, design.r)
        self.psi = self.delta @ alpha @ self.xi
        self.chol = np.linalg.cholesky(self.delta)
        self.scale = np.sqrt(np.diag(self.delta))
        self.g = _level_counts(design, rng)
        self.aux_seed = derive_seed(design.b_seed, 1)


def _response(design, rng, n):
    """ Response labels and the uncentered basis rows generating the latent means """
    if design.response == 'classes':
        y = rng.integers(0, design.n_classes, size=n)
        return y, np.eye(design.n_classes)[y, :design.r]
    u = rng.standard_normal(n)
    f = u[:, None]**np.arange(1, design.r + 1)
    return (np.exp(u) if design.response == 'lognormal' else u), f


def _latent(design, pop, rng, n):
    y, f = _response(design, rng, n)
    F = f - f.mean(axis=0)
    if design.error_kind == 'chi2':
        eps = (rng.chisquare(5, size=(n, design.p)) - 5)/math.sqrt(10)
    else:
        eps = rng.standard_normal((n, design.p))
    z = F @ pop.psi.T + eps @ pop.chol.T
    return y, z/pop.scale


def _cuts(z, g):
    return [np.quantile(z[:, j], np.arange(1, g[j])/g[j]) for j in range(z.shape[1])]


def generate(design):
    """ Sample a dataset and its ground truth

    ``Z | Y = Delta alpha xi f_Y + eps`` is rescaled to unit conditional
    variances and thresholded; the ground truth is expressed on that scale.

    Returns
    -------
    (OrdinalDataset, GroundTruth)

    """
    pop = _Population(design)
    rng = np.random.default_rng(design.seed)
    y, z = _latent(design, pop, rng, design.n)
    if design.threshold_rule == 'quantile':
        _, aux = _latent(design, pop, np.random.default_rng(pop.aux_seed), 20000)
        cuts = _cuts(aux, pop.g)
    else:
        cuts = _cuts(z, pop.g)
    thresholds = ThresholdSet(cuts)
    x = np.column_stack([np.searchsorted(cuts[j], z[:, j], side='right') + 1 for j in range(design.p)])
    kind = 'categorical' if design.response == 'classes' else 'continuous'
    data = OrdinalDataset.from_codes(x, y, response_kind=kind)
    s = pop.scale
    delta = pop.delta/np.outer(s, s)
    if design.d:
        alpha = orthonormalize(s[:, None]*pop.alpha)
        xi = np.linalg.lstsq(delta @ alpha, pop.psi/s[:, None], rcond=None)[0]
    else:
        alpha, xi = pop.alpha, pop.xi
    active = tuple(int(j) for j in np.flatnonzero(np.any(np.abs(alpha) > 1e-12, axis=1)))
    return data, GroundTruth(alpha, delta, xi, z, thresholds, active)


def subspace_angle(A, B):
    """ Largest principal angle (degrees) between the column spans of A and B

    Examples
    --------
    >>> import numpy as np
    >>> round(subspace_angle(np.eye(3)[:, :1], np.eye(3)[:, 1:2]), 10)
    90.0

    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    for M in (A, B):
        if M.shape[1] == 0 or np.linalg.matrix_rank(M) < M.shape[1]:
            raise RankDeficient("Basis matrix is not of full column rank")
    return float(np.degrees(subspace_angles(A, B).max()))


def _centered_distances(U):
    U = np.asarray(U, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    a = squareform(pdist(U, metric='euclidean'))
    return a - a.mean(axis=0) - a.mean(axis=1)[:, None] + a.mean()


def dcor(U, V):
    """ Sample distance correlation of two blocks of observations

    Examples
    --------
    >>> import numpy as np
    >>> u = np.arange(10.0)[:, None]
    >>> round(dcor(u, 3*u + 1), 10)
    1.0

    """
    A, B = _centered_distances(U), _centered_distances(V)
    n = A.shape[0]
    if n < 4 or B.shape[0] != n:
        raise ValidationError("Need two samples of equal size n >= 4")
    dvar_a, dvar_b = (A*A).mean(), (B*B).mean()
    if dvar_a <= 0 or dvar_b <= 0:
        raise DegenerateSample("Zero distance variance")
    dcov2 = max((A*B).mean(), 0.0)
    return float(min(math.sqrt(dcov2/math.sqrt(dvar_a*dvar_b)), 1.0))


def selection_metrics(truth, runs):
    """ Containment frequency of the true active set and size of the selected sets

    Examples
    --------
    >>> selection_metrics([0, 1], [[0, 1], [0, 1, 2], [1]])['pr_contain']
    0.6666666666666666

    """
    runs = [set(run) for run in runs]
    if not runs:
        raise ValidationError("No runs")
    truth = set(truth)
    card = np.array([len(run) for run in runs], dtype=np.float64)
    return {'pr_contain': float(np.mean([truth <= run for run in runs])),
            'mean_card': float(card.mean()), 'sd_card': float(card.std())}


def replicate_seeds(master, reps):
    return [derive_seed(master, i) for i in range(reps)]


def run_replicates(fn, seeds, n_jobs=1):
    """ ``[fn(seed) for seed in seeds]``, in parallel with ``n_jobs != 1`` (order kept) """
    if n_jobs == 1:
        return [fn(seed) for seed in seeds]
    return Parallel(n_jobs=n_jobs)(delayed(fn)(seed) for seed in seeds)
