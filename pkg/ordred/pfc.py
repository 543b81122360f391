# -*- coding: utf-8 -*-
"""
Principal fitted components for continuous predictors.

Used to initialize the ordinal EM algorithm (applied to the raw codes) and
as the naive baseline it is compared against.
"""
from __future__ import (absolute_import, division, print_function)

import logging

import numpy as np

from .model import BasisMatrix
from .util import NumericalError, ValidationError, orthonormalize, sym_power

logger = logging.getLogger(__name__)


class SingularCovariance(NumericalError):
    pass


class PfcFit(object):
    """ Result of :func:`fit_pfc`

    Attributes
    ----------
    alpha : array (p, d)
        Orthonormal basis of the estimated reduction subspace.
    sigma : array (p, p)
        Marginal sample covariance.
    sigma_fit : array (p, p)
        Covariance of the fitted values of the regression on F.
    eigenvalues : array (p,)
        Descending eigenvalues of ``sigma^-1/2 sigma_fit sigma^-1/2``.
    coef : array (r, p)
        Regression coefficients of the centered data on F.
    mean : array (p,)
    ridge : float
        Ridge added to ``sigma`` (0 when none was needed).

    """

    def __init__(self, alpha, sigma, sigma_fit, eigenvalues, coef, mean, ridge=0.0):
        self.alpha = alpha
        self.sigma = sigma
        self.sigma_fit = sigma_fit
        self.eigenvalues = eigenvalues
        self.coef = coef
        self.mean = mean
        self.ridge = ridge

    @property
    def d(self):
        return self.alpha.shape[1]

    def reduce(self, data):
        """ Linear reduction ``alpha^T (x - mean)`` """
        return (np.asarray(data, dtype=np.float64) - self.mean) @ self.alpha


def fit_pfc(data, F, d, ridge=True):
    """ Principal fitted components estimate of the reduction subspace

    Parameters
    ----------
    data : array_like (n, p)
    F : BasisMatrix or array_like (n, r)
        Centered basis matrix.
    d : int
    ridge : bool
        Add ``1e-8*trace(sigma)/p`` to the diagonal of a near-singular
        ``sigma`` instead of raising :class:`SingularCovariance`.

    Returns
    -------
    PfcFit

    """
    X = np.asarray(data, dtype=np.float64)
    Fa = F.F if isinstance(F, BasisMatrix) else np.asarray(F, dtype=np.float64)
    n, p = X.shape
    if Fa.shape[0] != n:
        raise ValidationError("F has %d rows, data has %d" % (Fa.shape[0], n))
    r = Fa.shape[1]
    if not 0 <= d <= min(r, p):
        raise ValidationError("Need 0 <= d <= min(r, p) = %d" % min(r, p))
    mean = X.mean(axis=0)
    Xc = X - mean
    sigma = Xc.T @ Xc / n
    coef = np.linalg.solve(Fa.T @ Fa, Fa.T @ Xc)
    sigma_fit = Xc.T @ (Fa @ coef) / n
    sigma_fit = (sigma_fit + sigma_fit.T)/2

    eps = 0.0
    if np.linalg.eigvalsh(sigma)[0] < 1e-10:
        if not ridge:
            raise SingularCovariance("Sample covariance is (near) singular")
        eps = 1e-8*np.trace(sigma)/p
        if eps == 0:
            raise SingularCovariance("Sample covariance is zero")
        logger.info("Adding ridge %g to a near-singular sample covariance", eps)
    root = sym_power(sigma + eps*np.eye(p), -0.5)
    kernel = root @ sigma_fit @ root
    w, v = np.linalg.eigh((kernel + kernel.T)/2)
    w, v = w[::-1], v[:, ::-1]
    alpha = orthonormalize(root @ v[:, :d]) if d > 0 else np.zeros((p, 0))
    return PfcFit(alpha, sigma, sigma_fit, w, coef, mean, eps)
