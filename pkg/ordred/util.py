# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

from functools import reduce
import operator
import os

import numpy as np


class OrdredError(Exception):
    """ Base class of all errors raised deliberately by ``ordred`` """


class ValidationError(OrdredError, ValueError):
    """ Invalid input data, parameters or configuration """


class NumericalError(OrdredError, ArithmeticError):
    """ Numerical failure for an otherwise well-posed input """


class RidgeWarning(UserWarning):
    """ A ridge term was added to a near-singular matrix """


class requires(object):
    """ Conditional skipping (on requirements) of tests in pytest

    Examples
    --------
    >>> @requires('numpy', 'scipy')
    ... def test_sqrt():
    ...     import numpy as np
    ...     assert np.sqrt(4) == 2
    ...     from scipy.special import ndtr
    ...     assert ndtr(0) == 0.5
    ...
    >>> @requires('numpy>=1.9.0')
    ... def test_nanmedian():
    ...     import numpy as np
    ...     a = np.array([[10.0, 7, 4], [3, 2, 1]])
    ...     a[0, 1] = np.nan
    ...     assert np.nanmedian(a) == 3
    ...

    """
    _import_names = {'scikit-learn': 'sklearn'}

    def __init__(self, *reqs):
        from packaging.requirements import Requirement
        self.missing = []
        self.incomp = []
        self.requirements = [Requirement(req) for req in reqs]
        for req in self.requirements:
            try:
                mod = __import__(self._import_names.get(req.name, req.name))
            except ImportError:
                self.missing.append(req.name)
            else:
                try:
                    ver = mod.__version__
                except AttributeError:
                    pass
                else:
                    if req.specifier and not req.specifier.contains(ver, prereleases=True):
                        self.incomp.append(str(req))

    def __call__(self, cb):
        import pytest
        r = 'Unfulfilled requirements.'
        if self.missing:
            r += " Missing modules: %s." % ', '.join(self.missing)
        if self.incomp:
            r += " Incomp versions: %s." % ', '.join(self.incomp)
        return pytest.mark.skipif(bool(self.missing or self.incomp), reason=r)(cb)


class MissingImport(object):

    def __init__(self, modname, exc):
        self._modname = modname
        self._exc = exc

    def __getattribute__(self, attr):
        if attr in ('_modname', '_exc'):
            return object.__getattribute__(self, attr)
        else:
            raise self._exc

    def __getitem__(self, key):
        raise self._exc

    def __call__(self, *args, **kwargs):
        raise self._exc


def import_(modname, *args):
    """ Import a module (or names from it), deferring ImportError to first use """
    if len(args) == 0:
        try:
            return __import__(modname)
        except ImportError as e:
            return MissingImport(modname, e)

    mods = []
    for arg in args:
        try:
            mod = __import__(modname, globals(), locals(), [arg])
        except ImportError as e:
            mods.append(MissingImport(modname + '.' + arg, e))
        else:
            try:
                attr = getattr(mod, arg)
            except AttributeError as e:
                mods.append(MissingImport(modname + '.' + arg, e))
            else:
                mods.append(attr)
    return mods if len(args) > 1 else mods[0]


def merge_dicts(*dicts):
    """ Merges dictionaries with incresing priority.

    Parameters
    ----------
    \\*dicts: dictionaries

    Examples
    --------
    >>> d1, d2 = {'a': 1, 'b': 2}, {'a': 2, 'c': 3}
    >>> merge_dicts(d1, d2, {'a': 3}) == {'a': 3, 'b': 2, 'c': 3}
    True
    >>> d1 == {'a': 1, 'b': 2}
    True

    Returns
    -------
    dict

    """
    return reduce(lambda x, y: x.update(y) or x, (dicts[0].copy(),) + dicts[1:])


def default_n_jobs():
    return os.cpu_count() or 1


def derive_seed(master, *counter):
    """ Derive an independent 32-bit seed from a master seed and a counter

    The result only depends on ``(master, counter)``, never on the order in
    which seeds are requested.

    Examples
    --------
    >>> derive_seed(7, 3) == derive_seed(7, 3)
    True
    >>> derive_seed(7, 3) != derive_seed(7, 4)
    True

    """
    if master is None:
        raise ValidationError("A master seed is required")
    entropy = [int(master)] + [int(c) for c in counter]
    if any(e < 0 for e in entropy):
        raise ValidationError("Seeds and counters must be non-negative")
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)[0])


def chunk_bounds(n, chunk_size):
    """ Consecutive ``(start, stop)`` pairs covering ``range(n)`` """
    chunk_size = max(int(chunk_size), 1)
    return [(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]


def pairwise_sum(terms):
    """ Sum over the leading axis with a fixed pairwise association order

    Examples
    --------
    >>> float(pairwise_sum(np.arange(100.0)))
    4950.0

    """
    terms = np.asarray(terms)
    if terms.shape[0] == 0:
        raise ValueError("Nothing to sum")
    if terms.shape[0] <= 8:
        return reduce(operator.add, list(terms))
    half = terms.shape[0] // 2
    return pairwise_sum(terms[:half]) + pairwise_sum(terms[half:])


def sym_power(a, power):
    """ Matrix power of a symmetric positive definite matrix

    Parameters
    ----------
    a : array_like (n, n)
    power : float
        e.g. ``-0.5`` for the inverse square root.

    """
    a = np.asarray(a, dtype=np.float64)
    w, v = np.linalg.eigh((a + a.T)/2)
    if w[0] <= 0:
        raise NumericalError("Matrix is not positive definite (smallest eigenvalue %g)" % w[0])
    return (v * w**power) @ v.T


def orthonormalize(a):
    """ Orthonormal basis of the column span of ``a`` (QR with positive diagonal)

    Zero rows of ``a`` stay zero rows.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[1] == 0:
        return a.copy()
    q, r = np.linalg.qr(a)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-13*max(diag.max(), 1e-300):
        raise NumericalError("Columns are linearly dependent")
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    q = q * signs
    q[~np.any(a != 0, axis=1)] = 0.0
    return q


def s_orthonormalize(a, s):
    """ Polar factor of ``a`` under the inner product of ``s``: ``a (a^T s a)^(-1/2)``

    The result satisfies ``b^T s b = I`` and spans the same space as ``a``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[1] == 0:
        return a.copy()
    gram = a.T @ s @ a
    return a @ sym_power(gram, -0.5)
