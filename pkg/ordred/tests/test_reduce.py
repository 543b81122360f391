# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import numpy as np
import pytest
from scipy.special import ndtr
from scipy.stats import norm

from ..em import fit
from ..reduce import (DimensionNotOne, LookupTable, Reducer, Refusal, ZeroVariance, conditional_mean,
                      index_orientation, normalized_index, posterior_weights, reduce, ses_index,
                      table_size, tabulate)
from ..util import ValidationError
from ._designs import small_problem, tiny_model


def _upper_mean(mu):
    """ E(Z | Z > 0) for Z ~ N(mu, 1) """
    return mu + norm.pdf(mu)/ndtr(mu)


def test_posterior_weights():
    model = tiny_model()
    w = posterior_weights([2, 1], model)
    assert np.allclose(w, [ndtr(-1.0), ndtr(1.0)], rtol=1e-12)
    assert abs(w.sum() - 1) < 1e-14
    assert np.allclose(posterior_weights([1, 2], model), w[::-1], rtol=1e-12)


def test_reduce__closed_form():
    model = tiny_model()
    expected = ndtr(-1.0)*_upper_mean(-1.0) + ndtr(1.0)*_upper_mean(1.0)
    r = reduce([2, 1], model)
    assert r.shape == (1,)
    assert abs(r[0] - expected) < 1e-10
    R = reduce([[1, 1], [2, 1], [2, 2], [1, 2]], model)
    assert R.shape == (4, 1)
    assert np.allclose(R[:, 0], [-expected, expected, expected, -expected], atol=1e-10)


def test_reduce__deterministic():
    model = tiny_model(rho=0.5)
    x = [[1, 1], [1, 2], [2, 1], [2, 2]]
    a = reduce(x, model)
    assert np.array_equal(a, reduce(x, model))
    assert np.array_equal(a[2], reduce(x[2], model))
    assert a[0, 0] < a[3, 0]


def test_reduce__bad_codes():
    model = tiny_model()
    with pytest.raises(ValidationError):
        reduce([1, 1, 1], model)
    with pytest.raises(ValidationError):
        reduce([1.5, 1], model)


def test_conditional_mean():
    model = tiny_model()
    m = conditional_mean([[2, 1], [1, 1], [2, 2]], model)
    assert m.shape == (3, 2)
    assert np.all(m[[0, 2], 0] > 0) and np.all(m[1] < 0)
    assert np.allclose(m[0, 1], -np.sqrt(2/np.pi), rtol=1e-10)
    assert conditional_mean([2, 1], model).shape == (2,)


def test_Reducer():
    model = tiny_model(rho=0.3)
    reducer = Reducer(model, with_weights=True)
    res = reducer([[1, 1], [2, 2], [1, 1], [1, 1]])
    assert res.cache_stats == {'hits': 2, 'misses': 2, 'size': 2}
    assert np.array_equal(res.r, reduce([[1, 1], [2, 2], [1, 1], [1, 1]], model))
    assert res.weights.shape == (4, 2)
    assert np.allclose(res.weights.sum(axis=1), 1)
    assert Reducer(model)([[2, 1]]).weights is None
    assert reducer.cache_info().currsize == 2


def test_normalized_index():
    idx = normalized_index([[1.0], [3.0], [2.0]], [5, 1, 3])
    assert idx.tolist() == [1.0, 0.0, 0.5]
    assert normalized_index([1.0, 3.0], ['b', 'a'], categorical=True).tolist() == [1.0, 0.0]
    assert index_orientation(np.array([1.0, 2.0]), [4.0, 4.0]) == 1
    with pytest.raises(DimensionNotOne):
        normalized_index(np.ones((3, 2)), [1, 2, 3])
    with pytest.raises(ZeroVariance):
        normalized_index([2.0, 2.0, 2.0], [1, 2, 3])


def test_ses_index():
    data, _, spec = small_problem(0, n=120, xi_scale=2.0)
    model = fit(data, spec, 1)
    idx = ses_index(data, model)
    assert idx.shape == (data.n,)
    assert idx.min() == 0.0 and idx.max() == 1.0
    assert np.corrcoef(idx, data.y)[0, 1] > 0
    with pytest.raises(DimensionNotOne):
        ses_index(data, fit(data, spec, 0))


def test_table_size():
    assert table_size([3, 4], 2) == 3*4*2*8
    assert table_size([2]*3, 1, itemsize=4) == 32


def test_tabulate():
    model = tiny_model(rho=0.2)
    table = tabulate(model)
    assert isinstance(table, LookupTable)
    assert table.table.shape == (2, 2, 1)
    assert table.size_bytes == table_size(model.thresholds.g, 1)
    x = np.array([[1, 1], [1, 2], [2, 1], [2, 2], [2, 1]])
    assert np.array_equal(table(x), reduce(x, model))


def test_tabulate__refusal():
    model = tiny_model()
    res = tabulate(model, memory_budget=16)
    assert isinstance(res, Refusal)
    assert res.size_bytes == 32 and res.budget == 16
    assert np.array_equal(res.reducer([[2, 2]]).r, reduce([[2, 2]], model))


def _quadrant_prob(mean, cov, lower, upper, n=60, clip=9.0):
    sd = np.sqrt(np.diag(cov))
    lower = np.maximum(lower, mean - clip*sd)
    upper = np.minimum(upper, mean + clip*sd)
    nodes, weights = np.polynomial.legendre.leggauss(n)
    half = (upper - lower)/2
    u = lower[0] + half[0]*(nodes + 1)
    v = lower[1] + half[1]*(nodes + 1)
    U, V = np.meshgrid(u, v, indexing='ij')
    dev = np.stack([U - mean[0], V - mean[1]], axis=-1)
    k = np.linalg.inv(cov)
    dens = np.exp(-0.5*np.einsum('...i,ij,...j->...', dev, k, dev))/(2*np.pi*np.sqrt(np.linalg.det(cov)))
    return half[0]*half[1]*np.einsum('i,j,ij->', weights, weights, dens)


@pytest.mark.parametrize('rho', [-0.5, 0.3, 0.7])
def test_posterior_weights__grid_quadrature(rho):
    model = tiny_model(rho=rho)
    cov = model.params.delta
    means = model.slices.fbar @ model.params.psi.T
    for x in ([1, 1], [1, 2], [2, 1], [2, 2]):
        lower, upper = model.thresholds.cell(np.array(x))
        probs = np.array([_quadrant_prob(m, cov, lower, upper) for m in means])
        ref = probs*model.slices.prior/(probs*model.slices.prior).sum()
        w = posterior_weights(x, model)
        assert np.allclose(w, ref, atol=2e-3)
        assert abs(w.sum() - 1) < 1e-12
