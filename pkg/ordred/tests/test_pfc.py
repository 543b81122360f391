from __future__ import absolute_import

import numpy as np
import pytest

from ..model import BasisSpec, build_basis
from ..pfc import SingularCovariance, fit_pfc
from ..simulate import subspace_angle
from ..util import ValidationError


def _linear_sample(n=400, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(n)
    direction = np.array([1.0, -1.0, 0.0, 0.0])/np.sqrt(2)
    X = 2*y[:, None]*direction + rng.standard_normal((n, 4))
    return X, y, direction


def test_fit_pfc():
    X, y, direction = _linear_sample()
    F = build_basis(y, BasisSpec.polynomial(1))
    res = fit_pfc(X, F, 1)
    assert res.alpha.shape == (4, 1)
    assert np.allclose(res.alpha.T @ res.alpha, 1)
    assert subspace_angle(direction, res.alpha) < 10
    assert np.all(np.diff(res.eigenvalues) <= 1e-12)
    assert res.coef.shape == (1, 4)
    assert res.ridge == 0
    r = res.reduce(X)
    assert r.shape == (400, 1)
    assert abs(np.corrcoef(r[:, 0], y)[0, 1]) > 0.8


def test_fit_pfc__d0_and_errors():
    X, y, _ = _linear_sample(n=50)
    F = build_basis(y, BasisSpec.polynomial(2))
    assert fit_pfc(X, F, 0).alpha.shape == (4, 0)
    with pytest.raises(ValidationError):
        fit_pfc(X, F, 3)
    with pytest.raises(ValidationError):
        fit_pfc(X[:10], F, 1)


def test_fit_pfc__singular():
    X, y, _ = _linear_sample(n=50)
    X = np.column_stack([X, X[:, 0]])
    F = build_basis(y, BasisSpec.polynomial(1))
    with pytest.raises(SingularCovariance):
        fit_pfc(X, F, 1, ridge=False)
    res = fit_pfc(X, F, 1)
    assert res.ridge > 0


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_fit_pfc__basis_invariance(seed):
    X, y, _ = _linear_sample(n=200, seed=seed)
    F = build_basis(y, BasisSpec.polynomial(2)).F
    A = np.random.default_rng(seed).standard_normal((2, 2)) + 2*np.eye(2)
    ref = fit_pfc(X, F, 1)
    res = fit_pfc(X, F @ A, 1)
    assert subspace_angle(ref.alpha, res.alpha) < 1e-4
    assert np.allclose(res.eigenvalues, ref.eigenvalues, rtol=1e-8, atol=1e-12)
    assert np.allclose(res.sigma_fit, ref.sigma_fit, rtol=1e-10, atol=1e-12)
