# -*- coding: utf-8 -*-
"""
EM estimation of the ordinal latent inverse regression model.

Every iteration re-estimates the thresholds given the current parameters
(Step 1), collects the conditional moments of the latent vectors (E-step)
and maximizes the expected complete-data log-likelihood in closed form
(M-step). The covariance is then rescaled to a unit diagonal, which fixes the
latent scale.
"""
from __future__ import (absolute_import, division, print_function)

import logging
import math
import os
import time
import warnings

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .model import BasisMatrix, ModelParams, ThresholdSet, build_basis
from .pfc import fit_pfc
from .results import FittedModel, SliceTable
from .tmvn import MOMENT_BACKENDS, BudgetExhausted, EmptyCell, NoConvergenceWarning
from .util import (NumericalError, OrdredError, RidgeWarning, ValidationError, chunk_bounds,
                   import_, orthonormalize, pairwise_sum, sym_power)

Parallel, delayed = import_('joblib', 'Parallel', 'delayed')

logger = logging.getLogger(__name__)


class LevelNotObserved(ValidationError):

    def __init__(self, msg, column=None):
        super(LevelNotObserved, self).__init__(msg)
        self.column = column


class NearSingularResidual(NumericalError):
    pass


class ObservationError(NumericalError):
    """ Failure to compute the moments of one observation """

    def __init__(self, msg, index=None):
        super(ObservationError, self).__init__(msg)
        self.index = index


def _basis_array(F):
    return F.F if isinstance(F, BasisMatrix) else np.asarray(F, dtype=np.float64)


def _sym(a):
    return (a + a.T)/2


class EStepSummary(object):
    """ Sufficient statistics of one E-step

    Attributes
    ----------
    S : array (p, p)
        Mean conditional second moment ``(1/n) sum E(z z^T | x, y)``.
    M : array (n, p)
        Conditional means ``E(z | x, y)`` as rows.
    F : array (n, r)
    S_fit : array (p, p)
        ``M^T F (F^T F)^-1 F^T M / n``.
    S_res : array (p, p)
        ``S - S_fit``.
    n_unconverged : int
        Observations whose moment recursion hit the sweep limit.

    """

    def __init__(self, S, M, F, method='approximate', n_unconverged=0):
        self.S = _sym(np.asarray(S, dtype=np.float64))
        self.M = np.asarray(M, dtype=np.float64)
        self.F = _basis_array(F)
        n = self.M.shape[0]
        self.FtF = self.F.T @ self.F
        self.MtF = self.M.T @ self.F
        self.S_fit = _sym(self.MtF @ np.linalg.solve(self.FtF, self.MtF.T) / n)
        self.S_res = self.S - self.S_fit
        self.method = method
        self.n_unconverged = n_unconverged

    @property
    def n(self):
        return self.M.shape[0]

    @property
    def p(self):
        return self.M.shape[1]

    @property
    def r(self):
        return self.F.shape[1]

    @property
    def coef(self):
        """ ``M^T F (F^T F)^-1`` (p x r) """
        return np.linalg.solve(self.FtF, self.MtF.T).T


def estimate_thresholds(data, params, F, xtol=1e-12):
    """ Thresholds matching the observed cumulative counts (Step 1)

    For predictor ``j`` and level ``g`` solves
    ``#{i: x_ij <= g} = sum_i Phi((theta - (Psi fbar_i)_j)/delta_j)`` with
    Brent's method, ``delta_j`` being the square root of ``Delta_jj``.

    Parameters
    ----------
    data : OrdinalDataset
    params : ModelParams
    F : BasisMatrix or array (n, r)

    Returns
    -------
    ThresholdSet

    """
    means = _basis_array(F) @ params.psi.T
    n = data.n
    cuts = []
    for j in range(data.p):
        sd = math.sqrt(params.delta[j, j])
        mu = means[:, j]
        lo, hi = mu.min() - 20*sd, mu.max() + 20*sd
        counts = np.cumsum(np.bincount(data.x[:, j], minlength=data.g[j] + 1)[1:])
        roots = []
        for g in range(1, data.g[j]):
            c = counts[g - 1]
            if c == 0 or c == n:
                raise LevelNotObserved("Column %r: cumulative count of level %d is %d" % (
                    data.names[j], g, c), column=data.names[j])

            def L(theta):
                return c - ndtr((theta - mu)/sd).sum()

            if not L(lo) > 0 > L(hi):
                raise NumericalError("No sign change of the threshold equation for column %r" % data.names[j])
            roots.append(brentq(L, lo, hi, xtol=xtol))
        if np.any(np.diff(roots) <= 0):
            raise NumericalError("Thresholds of column %r are not increasing" % data.names[j])
        cuts.append(roots)
    return ThresholdSet(cuts)


_backend_kwargs = {
    'approximate': ('tol', 'max_sweeps'),
    'exact': ('budget', 'method', 'p_max'),
}


def _moments_chunk(cb, x, fbar, params, thresholds, start, kwargs):
    try:
        return cb(x, fbar, params, thresholds, **kwargs)
    except EmptyCell as e:
        i = start + (int(e.rows[0]) if e.rows is not None and len(e.rows) else 0)
        raise ObservationError("Observation %d: %s" % (i, e), index=i)
    except BudgetExhausted as e:
        raise ObservationError("Observations %d..%d: %s" % (start, start + x.shape[0] - 1, e), index=start)


def e_step(data, params, thresholds, F, backend=None, n_jobs=1, chunk_size=None, seed=0, **kwargs):
    """ Conditional moments of all latent vectors and their summary (E-step)

    Observations are processed independently in chunks (in parallel when
    ``n_jobs != 1``); every observation gets the same result whatever the
    chunking, and ``S`` is accumulated in a fixed pairwise order.

    Parameters
    ----------
    data : OrdinalDataset
    params : ModelParams
    thresholds : ThresholdSet
    F : BasisMatrix or array (n, r)
    backend : str or callable
        'approximate' or 'exact' (default: ``$ORDRED_BACKEND`` or
        'approximate'), or a callable with the signature of
        :func:`ordred.tmvn.approx_conditional_moments`.
    n_jobs : int
    chunk_size : int
        Observations per task (default: ``ceil(n/n_jobs)``).
    seed : int
        Master seed of the exact backend.
    \\*\\*kwargs :
        Passed to the backend (e.g. ``budget``, ``method``, ``max_sweeps``).

    Returns
    -------
    EStepSummary

    """
    if backend is None:
        backend = os.environ.get('ORDRED_BACKEND', 'approximate')
    if callable(backend):
        cb = backend
    else:
        try:
            cb = MOMENT_BACKENDS[backend]
        except KeyError:
            raise ValidationError("Unknown backend: %s" % backend)
        kwargs = {k: v for k, v in kwargs.items() if k in _backend_kwargs[backend]}
        if backend == 'exact':
            kwargs = dict(kwargs, seed=seed)
    Fa = _basis_array(F)
    n = data.n
    n_jobs = n_jobs or 1
    if chunk_size is None:
        chunk_size = int(math.ceil(n/(abs(n_jobs) if n_jobs > 0 else os.cpu_count() or 1)))
    tasks = []
    for start, stop in chunk_bounds(n, chunk_size):
        kw = dict(kwargs, index=np.arange(start, stop)) if cb is MOMENT_BACKENDS['exact'] else kwargs
        tasks.append((cb, data.x[start:stop], Fa[start:stop], params, thresholds, start, kw))
    if n_jobs == 1 or len(tasks) == 1:
        chunks = [_moments_chunk(*t) for t in tasks]
    else:
        chunks = Parallel(n_jobs=n_jobs)(delayed(_moments_chunk)(*t) for t in tasks)
    M = np.concatenate([c.m for c in chunks])
    cross = np.concatenate([c.cross for c in chunks])
    n_unconverged = int(sum(np.sum(~np.asarray(c.converged)) for c in chunks))
    S = pairwise_sum(cross)/n
    return EStepSummary(S, M, Fa, method=chunks[0].method, n_unconverged=n_unconverged)


def _top_alpha(summary, d):
    """ ``S^-1/2`` times the leading eigenvectors of ``S^-1/2 S_fit S^-1/2`` """
    root = sym_power(summary.S, -0.5)
    w, v = np.linalg.eigh(_sym(root @ summary.S_fit @ root))
    return root @ v[:, ::-1][:, :d]


def m_step(summary, d, lam=None, ridge=False, rescale=True, penalty_kw=None):
    """ Closed-form maximizer of the expected log-likelihood (M-step)

    Parameters
    ----------
    summary : EStepSummary
    d : int
    lam : float, optional
        Group-lasso penalty; ``alpha`` then comes from
        :func:`ordred.regularize.fit_penalized_alpha`.
    ridge : bool
        Regularize a near-singular ``alpha^T S_res alpha`` instead of raising
        :class:`NearSingularResidual`.
    rescale : bool
        Rescale to a unit-diagonal ``Delta`` (default). With ``False`` the
        raw optimum is returned (``ModelParams(..., strict=False)``).
    penalty_kw : dict
        Extra options for the penalized solver.

    Returns
    -------
    ModelParams

    """
    S = summary.S
    p, r = summary.p, summary.r
    if not 0 <= d <= min(r, p):
        raise ValidationError("Need 0 <= d <= min(r, p) = %d" % min(r, p))
    S_inv = np.linalg.inv(S)
    if d == 0:
        alpha = np.zeros((p, 0))
        delta_inv = S_inv
    else:
        if lam:
            from .regularize import AllRowsKilled, fit_penalized_alpha
            pen = fit_penalized_alpha(summary, d, lam, **(penalty_kw or {}))
            if pen.all_killed:
                raise AllRowsKilled("lambda=%g removes every predictor" % lam, lam=lam)
            alpha = pen.alpha
        else:
            alpha = _top_alpha(summary, d)
        alpha = orthonormalize(alpha)
        h_res = _sym(alpha.T @ summary.S_res @ alpha)
        if np.linalg.cond(h_res) > 1e12:
            if not ridge:
                raise NearSingularResidual("alpha^T S_res alpha is near singular")
            eps = 1e-8*max(np.trace(h_res), 1e-300)/d
            warnings.warn("Adding ridge %g to alpha^T S_res alpha" % eps, RidgeWarning)
            h_res = h_res + eps*np.eye(d)
        delta_inv = (S_inv + alpha @ np.linalg.solve(h_res, alpha.T)
                     - alpha @ np.linalg.solve(_sym(alpha.T @ S @ alpha), alpha.T))
    delta = _sym(np.linalg.inv(_sym(delta_inv)))
    xi = np.linalg.solve(_sym(alpha.T @ delta @ alpha), alpha.T @ summary.coef) if d else np.zeros((0, r))
    raw = ModelParams(delta, alpha, xi, strict=False)
    return rescale_unit_diagonal(raw) if rescale else raw


def rescale_unit_diagonal(params):
    """ Same model on the latent scale where ``Delta`` has a unit diagonal

    ``Delta -> D^-1/2 Delta D^-1/2``, ``alpha`` -> orthonormal basis of
    ``D^1/2 span(alpha)``, ``Psi -> D^-1/2 Psi``.
    """
    s = np.sqrt(np.diag(params.delta))
    delta = params.delta/np.outer(s, s)
    np.fill_diagonal(delta, 1.0)
    delta = _sym(delta)
    if params.d == 0:
        return ModelParams(delta, params.alpha, params.xi)
    alpha = orthonormalize(s[:, None]*params.alpha)
    basis = delta @ alpha
    xi = np.linalg.lstsq(basis, params.psi/s[:, None], rcond=None)[0]
    return ModelParams(delta, alpha, xi)


def q_value(summary, params):
    """ Expected complete-data log-likelihood Q at ``params``

    ``-(pn/2) log(2 pi) - (n/2) log|Delta| - (n/2) tr[Delta^-1 C]`` with
    ``C = S - (Psi F^T M + M^T F Psi^T)/n + Psi F^T F Psi^T / n``.

    Examples
    --------
    >>> import numpy as np
    >>> from ordred.model import ModelParams
    >>> summary = EStepSummary(np.eye(1), np.array([[1.], [-1.]]), np.array([[.5], [-.5]]))
    >>> q = q_value(summary, ModelParams(np.eye(1), np.zeros((1, 0)), np.zeros((0, 1))))
    >>> bool(np.isclose(q, -np.log(2*np.pi) - 1))
    True

    """
    n, p = summary.n, summary.p
    psi = params.psi
    cross = psi @ summary.MtF.T
    C = summary.S - (cross + cross.T)/n + psi @ summary.FtF @ psi.T / n
    _, logdet = np.linalg.slogdet(params.delta)
    return float(-0.5*p*n*math.log(2*math.pi) - 0.5*n*logdet
                 - 0.5*n*np.trace(np.linalg.solve(params.delta, C)))


def _logdet(a):
    if a.shape[0] == 0:
        return 0.0
    sign, val = np.linalg.slogdet(_sym(a))
    if sign <= 0:
        raise NumericalError("Matrix is not positive definite")
    return val


def q_profile(summary, alpha):
    """ Q maximized over ``Delta`` and ``xi`` for a given ``alpha``

    ``-(pn/2)(log(2 pi) + 1) - (n/2) log|a^T S_res a| - (n/2) log|S| + (n/2) log|a^T S a|``
    """
    n, p = summary.n, summary.p
    alpha = np.asarray(alpha, dtype=np.float64)
    return float(-0.5*p*n*(math.log(2*math.pi) + 1)
                 - 0.5*n*_logdet(alpha.T @ summary.S_res @ alpha)
                 - 0.5*n*_logdet(summary.S)
                 + 0.5*n*_logdet(alpha.T @ summary.S @ alpha))


def initial_params(data, F, d, ridge=True):
    """ Starting values from principal fitted components on the raw codes (Step 0)

    ``Delta`` starts as the sample correlation of the codes, ``alpha`` as the
    PFC subspace mapped to the standardized code scale and ``xi`` as the
    least-squares fit of the standardized PFC regression coefficients.
    """
    X = data.x.astype(np.float64)
    n, p = X.shape
    pf = fit_pfc(X, F, d, ridge=ridge)
    sdv = np.sqrt(np.diag(pf.sigma))
    corr = pf.sigma/np.outer(sdv, sdv)
    if np.linalg.eigvalsh(corr)[0] < 1e-8:
        corr = (corr + 1e-6*np.eye(p))/(1 + 1e-6)
    np.fill_diagonal(corr, 1.0)
    corr = _sym(corr)
    if d == 0:
        return ModelParams(corr, np.zeros((p, 0)), np.zeros((0, _basis_array(F).shape[1])))
    alpha = orthonormalize(sdv[:, None]*pf.alpha)
    gamma = (pf.coef/sdv).T
    xi = np.linalg.lstsq(corr @ alpha, gamma, rcond=None)[0]
    return ModelParams(corr, alpha, xi)


def em_trace(q_final, gains):
    """ Objective path of an EM run ending at its final Q

    Iteration ``k`` evaluates ``Q(Omega_k | Omega_{k-1})`` and
    ``Q(Omega_{k-1} | Omega_{k-1})`` on one E-step summary, so their
    difference (the M-step gain) is free of the unit-diagonal rescaling and
    of the threshold update between iterations. The trace accumulates those
    gains backwards from the last Q; it is non-decreasing whenever every
    M-step is an exact maximizer (unpenalized fits).

    Examples
    --------
    >>> em_trace(-10.0, [5.0, 0.5, 0.25])
    [-10.75, -10.25, -10.0]

    """
    later = np.cumsum(np.asarray(gains[:0:-1], dtype=np.float64))[::-1]
    return [float(q_final - g) for g in later] + [float(q_final)]


_moment_kwargs = ('budget', 'method', 'max_sweeps', 'chunk_size', 'p_max')


def fit(data, spec, d, backend=None, tol=1e-6, max_iter=200, seed=0, n_jobs=1, lam=None, init=None,
        ridge=False, reduction_slices=10, penalty_kw=None, **kwargs):
    """ Fit the model by alternating threshold estimation and EM updates

    Parameters
    ----------
    data : OrdinalDataset
    spec : BasisSpec
    d : int
        Dimension of the reduction, ``0 <= d <= min(r, p)``.
    backend : str
        Moment backend, 'approximate' or 'exact' (default:
        ``$ORDRED_BACKEND`` or 'approximate').
    tol : float
        Stop when the M-step gain relative to Q falls below ``tol``, see
        :func:`em_trace`.
    max_iter : int
        At least one.
    seed : int
        Master seed (exact backend), shared by all iterations.
    n_jobs : int
        Parallel E-step tasks.
    lam : float, optional
        Group-lasso penalty on the rows of alpha.
    init : ModelParams, optional
        Warm start instead of the PFC initialization.
    ridge : bool
        See :func:`m_step`.
    reduction_slices : int
        Slices of a continuous response used by the reduction.
    penalty_kw : dict
        Options of the penalized solver.
    \\*\\*kwargs :
        Moment backend options: 'budget', 'method', 'max_sweeps',
        'chunk_size', 'p_max'.

    Returns
    -------
    FittedModel

    """
    unknown = set(kwargs) - set(_moment_kwargs)
    if unknown:
        raise ValueError("Unknown kwargs: %s" % ', '.join(sorted(unknown)))
    if max_iter < 1:
        raise ValidationError("Need max_iter >= 1, got %r" % (max_iter,))
    if backend is None:
        backend = os.environ.get('ORDRED_BACKEND', 'approximate')
    if backend not in MOMENT_BACKENDS:
        raise ValidationError("Unknown backend: %s" % backend)
    basis = build_basis(data.y, spec, categorical=data.categorical)
    if not 0 <= d <= min(basis.r, data.p):
        raise ValidationError("Need 0 <= d <= min(r, p) = %d" % min(basis.r, data.p))
    t0 = time.perf_counter()
    params = init if init is not None else initial_params(data, basis, d)
    if params.d != d or params.r != basis.r or params.p != data.p:
        raise ValidationError("Initial parameters do not match (p, d, r)")
    q = None
    gains = []
    converged = False
    n_unconverged = 0
    for it in range(1, max_iter + 1):
        try:
            thresholds = estimate_thresholds(data, params, basis)
            # same seed every iteration: the exact E-step is a deterministic map of params
            summary = e_step(data, params, thresholds, basis, backend=backend, n_jobs=n_jobs,
                             seed=seed, **kwargs)
            raw = m_step(summary, d, lam=lam, ridge=ridge, rescale=False, penalty_kw=penalty_kw)
            q_old = q_value(summary, params)
            q = q_value(summary, raw)
            params = rescale_unit_diagonal(raw)
        except OrdredError as exc:
            exc.iteration = it
            logger.error("Iteration %d failed: %s", it, exc)
            raise
        n_unconverged += summary.n_unconverged
        gains.append(q - q_old)
        change = abs(q - q_old)/abs(q_old)
        logger.debug("iteration %d: Q=%.10g, M-step gain %.3g, relative change %.3g", it, q, q - q_old, change)
        if change < tol:
            converged = True
            break
    q_trace = em_trace(q, gains)
    thresholds = estimate_thresholds(data, params, basis)
    if not converged:
        warnings.warn("EM did not converge in %d iterations" % max_iter, NoConvergenceWarning)
    logger.info("EM finished after %d iterations (converged=%s, Q=%.10g)", len(q_trace), converged, q)
    if d and not params.xi_full_rank:
        logger.warning("Estimated xi is rank deficient, d=%d may be too large", d)
    slices = SliceTable.from_response(data.y, basis, h=reduction_slices, categorical=data.categorical)
    info = {'time': time.perf_counter() - t0, 'moment_unconverged': n_unconverged}
    return FittedModel(params, thresholds, basis.spec, q_trace, converged, len(q_trace), backend, seed,
                       slices, data.names, data.levels, data.merges, lam=lam,
                       response_name=data.response_name, response_kind=data.response_kind, info=info)


def summarize(data, model, n_jobs=1, **kwargs):
    """ E-step summary at a fitted model on its training data """
    basis = build_basis(data.y, model.basis, categorical=data.categorical)
    return e_step(data, model.params, model.thresholds, basis, backend=model.backend,
                  n_jobs=n_jobs, seed=model.seed, **kwargs)
