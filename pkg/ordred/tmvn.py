# -*- coding: utf-8 -*-
"""
Moments of (multivariate) normal distributions truncated to rectangles.

Two backends compute ``E(z | x, y)`` and ``E(z z^T | x, y)`` for the latent
vector restricted to the cell ``C(x, Theta)``:

- ``approximate``: coordinate-wise recursion on the conditional normal
  distributions with a product approximation of the cross moments.
- ``exact``: quasi-Monte Carlo over the sequential conditional (separation of
  variables) transform, or plain rejection sampling for small ``p``.

All tail probabilities are evaluated in the log domain.
"""
from __future__ import (absolute_import, division, print_function)

from collections import namedtuple
import math
import warnings

import numpy as np
from scipy.special import log_ndtr, ndtri_exp
from scipy.stats import qmc

from .util import NumericalError, ValidationError, derive_seed

_LOG_SQRT_2PI = 0.5*math.log(2*math.pi)


class EmptyCell(NumericalError):
    """ The probability of a cell is numerically zero """

    def __init__(self, msg, rows=None):
        super(EmptyCell, self).__init__(msg)
        self.rows = rows


class BudgetExhausted(NumericalError):
    pass


class NoConvergenceWarning(UserWarning):
    pass


class Rectangle(object):
    """ Product of half-open intervals ``[lower_j, upper_j)`` """

    def __init__(self, lower, upper):
        lower = np.array(lower, dtype=np.float64)
        upper = np.array(upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValidationError("lower and upper must be vectors of equal length")
        if not np.all(lower < upper):
            raise ValidationError("Empty rectangle (lower >= upper)")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValidationError("NaN bound")
        self.lower = lower
        self.upper = upper

    @classmethod
    def from_codes(cls, x, thresholds):
        return cls(*thresholds.cell(np.asarray(x)))

    @property
    def p(self):
        return self.lower.size

    def contains(self, z):
        z = np.asarray(z)
        return np.all((z >= self.lower) & (z < self.upper), axis=-1)

    def is_full(self):
        return bool(np.all(np.isneginf(self.lower)) and np.all(np.isposinf(self.upper)))


class ConditionalMoments(object):
    """ First and second moments of z given its cell (and the response)

    Attributes
    ----------
    m : array (p,) or (n, p)
    s2 : array like ``m``, second moments ``E(z_j^2)``
    cross : array (p, p) or (n, p, p), ``E(z z^T)``; off-diagonal entries are
        products ``m_j m_k`` for the approximate backend.
    method : str
        'approximate', 'exact-qmc' or 'exact-rejection'.
    m_se, s2_se : arrays or None
        Standard errors of the randomized backends.
    converged : bool array (per observation)

    """

    methods = ('approximate', 'exact-qmc', 'exact-rejection')

    def __init__(self, m, s2, method, cross=None, m_se=None, s2_se=None, converged=None):
        if method not in self.methods:
            raise ValidationError("Unknown method: %s" % method)
        self.m = m
        self.s2 = s2
        self.method = method
        self.cross = cross
        self.m_se = m_se
        self.s2_se = s2_se
        self.converged = np.ones(np.shape(m)[:-1], dtype=bool) if converged is None else converged

    @property
    def variance(self):
        return self.s2 - self.m**2


def _log_pdf(t):
    return -0.5*t*t - _LOG_SQRT_2PI


def log_diff_ndtr(lo, hi):
    """ ``log(Phi(hi) - Phi(lo))`` evaluated without cancellation in the tails """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64))
    upper_tail = lo > 0
    a = np.where(upper_tail, -hi, lo)
    b = np.where(upper_tail, -lo, hi)
    la, lb = log_ndtr(a), log_ndtr(b)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = lb + np.log(-np.expm1(la - lb))
    return np.where(np.isneginf(la), lb, out)


def _standard_truncated(lo, hi):
    """ A = E(t), B = E(t^2) - 1 for t ~ N(0, 1) truncated to [lo, hi], plus log P """
    logz = log_diff_ndtr(lo, hi)
    with np.errstate(over='ignore', invalid='ignore'):
        e_lo = np.where(np.isfinite(lo), np.exp(_log_pdf(lo) - logz), 0.0)
        e_hi = np.where(np.isfinite(hi), np.exp(_log_pdf(hi) - logz), 0.0)
        a = e_lo - e_hi
        b = np.where(np.isfinite(lo), lo*e_lo, 0.0) - np.where(np.isfinite(hi), hi*e_hi, 0.0)
    return a, b, logz


def _clamped_midpoints(lower, upper):
    mid = np.where(np.isneginf(lower), upper - 1, np.where(np.isposinf(upper), lower + 1, (lower + upper)/2))
    return np.where(np.isneginf(lower) & np.isposinf(upper), 0.0, mid)


def trunc_moments_1d(mu, sd, a, b):
    """ Mean and second moment of N(mu, sd^2) truncated to [a, b)

    Parameters
    ----------
    mu : float
    sd : float
        Positive.
    a, b : float
        Bounds, may be infinite, ``a < b``.

    Returns
    -------
    (mean, second_moment)

    Examples
    --------
    >>> mean, second = trunc_moments_1d(3, 2, -float('inf'), float('inf'))
    >>> float(mean), float(second)
    (3.0, 13.0)

    """
    if not a < b:
        raise ValidationError("Need a < b (got %r, %r)" % (a, b))
    if not sd > 0:
        raise ValidationError("sd must be positive")
    lo, hi = (a - mu)/sd, (b - mu)/sd
    A, B, logz = _standard_truncated(np.float64(lo), np.float64(hi))
    if not np.isfinite(logz):
        raise EmptyCell("Cell [%r, %r) has zero probability under N(%r, %r^2)" % (a, b, mu, sd))
    mean = float(np.clip(mu + sd*A, a, b))
    second = float(mu*mu + sd*sd + 2*A*mu*sd + B*sd*sd)
    return mean, max(second, mean*mean)


def approx_conditional_moments(x, fbar_y, params, thresholds, tol=1e-6, max_sweeps=50):
    """ Approximate moments of the latent vector given its cell and the response

    Gauss-Seidel sweeps over the coordinates: coordinate ``j`` is treated as
    a univariate normal, truncated to its cell, with the conditional mean
    ``(Psi f)_j + beta_j^T (m_{-j} - (Psi f)_{-j})`` and the conditional
    standard deviation given the other coordinates. The spread of the other
    coordinates enters the second moment through their current variances.
    Sweeps start at the clamped cell midpoints and stop per observation when
    the largest change is below ``tol``.

    Parameters
    ----------
    x : array_like (p,) or (n, p)
        Internal codes.
    fbar_y : array_like (r,) or (n, r)
        Centered basis rows of the responses.
    params : ModelParams
    thresholds : ThresholdSet
    tol : float
    max_sweeps : int

    Returns
    -------
    ConditionalMoments
        With a boolean ``converged`` per observation, a
        :class:`NoConvergenceWarning` is issued if any is ``False``.

    """
    x = np.asarray(x)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    n, p = x.shape
    fbar = np.atleast_2d(np.asarray(fbar_y, dtype=np.float64))
    mu = np.broadcast_to(fbar @ params.psi.T, (n, p))
    lower, upper = thresholds.cell(x)

    K = params.precision
    kdiag = np.diag(K)
    csd = 1/np.sqrt(kdiag)
    beta = -K/kdiag[:, None]
    np.fill_diagonal(beta, 0.0)

    m = _clamped_midpoints(lower, upper)
    var = np.zeros((n, p))
    active = np.ones(n, dtype=bool)
    for _ in range(max_sweeps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        m_old = m[idx]
        for j in range(p):
            cmean = mu[idx, j] + ((m[idx] - mu[idx])*beta[j]).sum(axis=1)
            spread = (var[idx]*beta[j]**2).sum(axis=1)
            lo = (lower[idx, j] - cmean)/csd[j]
            hi = (upper[idx, j] - cmean)/csd[j]
            A, B, logz = _standard_truncated(lo, hi)
            bad = ~np.isfinite(logz)
            if np.any(bad):
                raise EmptyCell("Cell of coordinate %d has zero probability" % j, rows=idx[bad])
            mj = np.clip(cmean + csd[j]*A, lower[idx, j], upper[idx, j])
            s2j = cmean**2 + spread + csd[j]**2*(1 + B) + 2*A*cmean*csd[j]
            m[idx, j] = mj
            var[idx, j] = np.maximum(s2j - mj**2, 0.0)
        done = np.abs(m[idx] - m_old).max(axis=1) < tol
        active[idx[done]] = False
    if np.any(active):
        warnings.warn("Moment recursion did not converge in %d sweeps for %d observation(s)" % (
            max_sweeps, int(active.sum())), NoConvergenceWarning)
    s2 = m**2 + var
    cross = m[:, :, None]*m[:, None, :]
    cross[:, np.arange(p), np.arange(p)] = s2
    if single:
        return ConditionalMoments(m[0], s2[0], 'approximate', cross=cross[0], converged=~active[0])
    return ConditionalMoments(m, s2, 'approximate', cross=cross, converged=~active)


def _ppf_lower(lo, hi, u):
    """ Inverse CDF of N(0, 1) truncated to [lo, hi] with ``lo <= 0`` """
    llo, lhi = log_ndtr(lo), log_ndtr(hi)
    with np.errstate(divide='ignore', invalid='ignore'):
        logp = np.where(np.isneginf(llo), np.log(u) + lhi, llo + np.log1p(u*np.expm1(lhi - llo)))
    return ndtri_exp(logp)


def _truncated_ppf(lo, hi, u):
    tail = lo > 0
    t = np.where(tail, -_ppf_lower(-hi, -lo, 1 - u), _ppf_lower(np.where(tail, 0.0, lo), np.where(tail, 1.0, hi), u))
    return np.clip(t, lo, hi)


def _genz_transform(mean, chol, lower, upper, u):
    """ Points in the cell and their log weights from uniforms (sequential conditioning) """
    npts, p = u.shape
    w = np.zeros((npts, p))
    logf = np.zeros(npts)
    for k in range(p):
        shift = mean[k] + w[:, :k] @ chol[k, :k]
        lo = (lower[k] - shift)/chol[k, k]
        hi = (upper[k] - shift)/chol[k, k]
        logf += log_diff_ndtr(lo, hi)
        w[:, k] = _truncated_ppf(lo, hi, u[:, k])
    return mean + w @ chol.T, logf


def _sobol(p, npts, rng):
    sampler = qmc.Sobol(d=p, scramble=True, seed=rng)
    u = sampler.random_base2(m=max(int(round(math.log2(npts))), 1))
    return np.clip(u, 1e-15, 1 - 1e-15)


def _log_mean_exp(logv):
    top = logv.max()
    if not np.isfinite(top):
        return top
    return top + math.log(np.mean(np.exp(logv - top)))


def _qmc_moments(mean, chol, lower, upper, budget, rng, replicates=8):
    p = mean.size
    per = max(budget // replicates, 2)
    ms, crosses = [], []
    for _ in range(replicates):
        z, logf = _genz_transform(mean, chol, lower, upper, _sobol(p, per, rng))
        if not np.isfinite(logf.max()):
            raise EmptyCell("Cell has zero probability")
        wgt = np.exp(logf - logf.max())
        wgt /= wgt.sum()
        ms.append(wgt @ z)
        crosses.append(np.einsum('n,ni,nj->ij', wgt, z, z))
    ms, crosses = np.array(ms), np.array(crosses)
    scale = 1/math.sqrt(replicates)
    diag = np.diagonal(crosses, axis1=1, axis2=2)
    return ms.mean(axis=0), crosses.mean(axis=0), ms.std(axis=0, ddof=1)*scale, diag.std(axis=0, ddof=1)*scale


def _rejection_moments(mean, chol, lower, upper, budget, rng, max_draws=2**24):
    p = mean.size
    batch = max(budget, 1024)
    kept, draws, n_kept = [], 0, 0
    while n_kept < budget and draws < max_draws:
        z = mean + rng.standard_normal((batch, p)) @ chol.T
        z = z[np.all((z >= lower) & (z < upper), axis=1)]
        kept.append(z)
        n_kept += z.shape[0]
        draws += batch
        if draws >= 2**20 and n_kept < 1e-6*draws:
            raise BudgetExhausted("Acceptance rate below 1e-6")
    if n_kept < 2:
        raise BudgetExhausted("Only %d of %d draws accepted" % (n_kept, draws))
    z = np.concatenate(kept)[:budget]
    k = z.shape[0]
    cross = z.T @ z / k
    return (z.mean(axis=0), cross, z.std(axis=0, ddof=1)/math.sqrt(k),
            (z**2).std(axis=0, ddof=1)/math.sqrt(k))


def exact_conditional_moments(x, fbar_y, params, thresholds, budget=2**13, method='qmc', seed=0,
                              index=None, seeds=None, p_max=8):
    """ Randomized (QMC or rejection) moments of the latent vector given its cell

    Parameters
    ----------
    x : array_like (p,) or (n, p)
    fbar_y : array_like (r,) or (n, r)
    params : ModelParams
    thresholds : ThresholdSet
    budget : int
        Number of QMC points (a power of two) or accepted rejection samples.
    method : str
        'qmc' (default) or 'rejection'; rejection falls back to QMC when the
        acceptance rate is too low.
    seed : int
        Master seed, combined with the observation ``index`` (default:
        ``range(n)``) so that each observation has its own stream.
    seeds : sequence of int, optional
        Explicit per-observation seeds (overrides ``seed``/``index``).
    p_max : int

    """
    if method not in ('qmc', 'rejection'):
        raise ValidationError("Unknown method: %s" % method)
    x = np.asarray(x)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    n, p = x.shape
    if p > p_max:
        raise ValidationError("Exact moments are limited to p <= %d (got p=%d)" % (p_max, p))
    fbar = np.atleast_2d(np.asarray(fbar_y, dtype=np.float64))
    mu = np.broadcast_to(fbar @ params.psi.T, (n, p))
    lower, upper = thresholds.cell(x)
    chol = np.linalg.cholesky(params.delta)
    if seeds is None:
        index = np.arange(n) if index is None else np.asarray(index)
        seeds = [derive_seed(seed, i) for i in index]
    m, cross = np.empty((n, p)), np.empty((n, p, p))
    m_se, s2_se = np.empty((n, p)), np.empty((n, p))
    used_rejection = method == 'rejection'
    for i in range(n):
        rng = np.random.default_rng(seeds[i])
        res = None
        if method == 'rejection':
            try:
                res = _rejection_moments(mu[i], chol, lower[i], upper[i], budget, rng)
            except BudgetExhausted:
                used_rejection = False
        if res is None:
            res = _qmc_moments(mu[i], chol, lower[i], upper[i], budget, rng)
        m[i], cross[i], m_se[i], s2_se[i] = res
    s2 = np.diagonal(cross, axis1=1, axis2=2).copy()
    label = 'exact-rejection' if used_rejection else 'exact-qmc'
    if single:
        return ConditionalMoments(m[0], s2[0], label, cross=cross[0], m_se=m_se[0], s2_se=s2_se[0])
    return ConditionalMoments(m, s2, label, cross=cross, m_se=m_se, s2_se=s2_se)


MOMENT_BACKENDS = {
    'approximate': approx_conditional_moments,
    'exact': exact_conditional_moments,
}


RectProb = namedtuple('RectProb', 'prob se log_prob exhausted')


def rect_prob(mean, cov, cell, budget=2**12, tol=None, seed=0, max_budget=2**16, replicates=8):
    """ Probability of a rectangle under N(mean, cov)

    Exact for diagonal ``cov`` (product of univariate probabilities) and for
    the whole space, otherwise randomized QMC over the sequential conditional
    transform. With ``tol`` the point count is doubled until the standard
    error drops below it or ``max_budget`` is reached (``exhausted`` flag).

    Returns
    -------
    RectProb
        ``(prob, se, log_prob, exhausted)``

    Examples
    --------
    >>> import numpy as np
    >>> full = Rectangle([-np.inf]*2, [np.inf]*2)
    >>> rect_prob([0, 0], [[1, .5], [.5, 1]], full).prob
    1.0

    """
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    if cell.is_full():
        return RectProb(1.0, 0.0, 0.0, False)
    offdiag = cov - np.diag(np.diag(cov))
    if not np.any(offdiag):
        sd = np.sqrt(np.diag(cov))
        logp = float(np.sum(log_diff_ndtr((cell.lower - mean)/sd, (cell.upper - mean)/sd)))
        return RectProb(math.exp(logp), 0.0, logp, False)
    chol = np.linalg.cholesky(cov)
    rng = np.random.default_rng(seed)
    while True:
        per = max(budget // replicates, 2)
        logps = np.array([
            _log_mean_exp(_genz_transform(mean, chol, cell.lower, cell.upper, _sobol(mean.size, per, rng))[1])
            for _ in range(replicates)])
        logp = _log_mean_exp(logps)
        se = float(np.std(np.exp(logps), ddof=1)/math.sqrt(replicates))
        if tol is None or se <= tol or budget >= max_budget:
            break
        budget *= 2
    exhausted = tol is not None and se > tol
    return RectProb(math.exp(logp), se, float(logp), exhausted)
