# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import numpy as np
import pytest
from scipy.special import ndtri

from ..em import (EStepSummary, e_step, em_trace, estimate_thresholds, fit, initial_params, m_step, q_profile,
                  q_value, rescale_unit_diagonal, summarize)
from ..model import BasisSpec, ModelParams, build_basis
from ..simulate import SimDesign, generate, subspace_angle
from ..tmvn import NoConvergenceWarning
from ..util import ValidationError, requires
from ._designs import small_problem


def _summary(seed=0, **kwargs):
    data, truth, spec = small_problem(seed, **kwargs)
    F = build_basis(data.y, spec)
    params = initial_params(data, F, 1)
    th = estimate_thresholds(data, params, F)
    return data, F, params, e_step(data, params, th, F)


def test_estimate_thresholds__null_model():
    data, _, spec = small_problem(1)
    F = build_basis(data.y, spec)
    params = ModelParams(np.eye(data.p), np.zeros((data.p, 0)), np.zeros((0, 1)))
    th = estimate_thresholds(data, params, F)
    for j in range(data.p):
        counts = np.cumsum(np.bincount(data.x[:, j])[1:])[:-1]
        assert np.allclose(th[j], ndtri(counts/data.n), atol=1e-10)


def test_estimate_thresholds__increasing():
    data, F, params, _ = _summary(2)
    th = estimate_thresholds(data, params, F)
    assert th.g.tolist() == data.g.tolist()
    assert all(np.all(np.diff(c) > 0) for c in th.cuts)


def test_e_step__chunking():
    data, F, params, summary = _summary(3)
    th = estimate_thresholds(data, params, F)
    chunked = e_step(data, params, th, F, chunk_size=7)
    assert np.allclose(chunked.M, summary.M, rtol=0, atol=1e-14)
    assert np.allclose(chunked.S, summary.S, rtol=0, atol=1e-14)
    assert summary.M.shape == (data.n, data.p)
    assert np.allclose(summary.S_fit + summary.S_res, summary.S)
    assert np.linalg.eigvalsh(summary.S_fit)[0] > -1e-12
    assert summary.method == 'approximate'
    with pytest.raises(ValidationError):
        e_step(data, params, th, F, backend='gibbs')


def test_m_step():
    data, F, params, summary = _summary(4)
    new = m_step(summary, 1)
    assert np.allclose(np.diag(new.delta), 1)
    assert np.allclose(new.alpha.T @ new.alpha, 1)
    assert new.xi.shape == (1, 1)
    null = m_step(summary, 0)
    assert null.d == 0 and null.xi.shape == (0, 1)
    with pytest.raises(ValidationError):
        m_step(summary, 2)


def test_m_step__maximizes_q():
    data, F, params, summary = _summary(5)
    raw = m_step(summary, 1, rescale=False)
    best = q_value(summary, raw)
    assert abs(best - q_profile(summary, raw.alpha)) < 1e-8*abs(best)
    assert best >= q_value(summary, params)
    rng = np.random.default_rng(0)
    for _ in range(5):
        alpha = raw.alpha + 0.1*rng.standard_normal(raw.alpha.shape)
        alpha /= np.linalg.norm(alpha)
        delta = raw.delta + 0.05*np.eye(data.p)
        assert best >= q_value(summary, ModelParams(delta, alpha, raw.xi, strict=False))


def test_rescale_unit_diagonal():
    data, F, params, summary = _summary(6)
    raw = m_step(summary, 1, rescale=False)
    scaled = rescale_unit_diagonal(raw)
    s = np.sqrt(np.diag(raw.delta))
    assert np.allclose(np.diag(scaled.delta), 1)
    assert np.allclose(scaled.psi, raw.psi/s[:, None])


def test_EStepSummary():
    summary = EStepSummary(np.eye(1), np.array([[1.], [-1.]]), np.array([[.5], [-.5]]))
    assert np.allclose(summary.coef, [[2.0]])
    assert np.allclose(summary.S_fit, [[1.0]])


def test_q_profile__full_dominates():
    data, F, params, summary = _summary(7)
    full = q_profile(summary, np.eye(data.p))
    for alpha in (np.zeros((data.p, 0)), m_step(summary, 1).alpha):
        assert full >= q_profile(summary, alpha) - 1e-9


def test_initial_params():
    data, _, spec = small_problem(8)
    F = build_basis(data.y, spec)
    params = initial_params(data, F, 1)
    assert params.strict and params.d == 1
    assert initial_params(data, F, 0).d == 0


def test_fit():
    data, truth, spec = small_problem(9, n=300)
    model = fit(data, spec, 1, seed=1)
    assert model.converged
    assert model.iterations == len(model.q_trace)
    assert model.backend == 'approximate'
    assert subspace_angle(truth.alpha, model.params.alpha) < 25
    assert np.allclose(np.diag(model.params.delta), 1)
    assert model.thresholds.g.tolist() == data.g.tolist()
    assert model.info['time'] > 0
    assert model.slices.h == 10


def test_fit__deterministic():
    data, _, spec = small_problem(10)
    a = fit(data, spec, 1, seed=3)
    b = fit(data, spec, 1, seed=3, chunk_size=11)
    assert a.iterations == b.iterations
    assert np.allclose(a.params.alpha, b.params.alpha, rtol=0, atol=1e-12)
    assert a.to_json() == fit(data, spec, 1, seed=3).to_json()


@requires('joblib')
def test_fit__threads():
    data, _, spec = small_problem(11)
    a = fit(data, spec, 1, seed=0)
    b = fit(data, spec, 1, seed=0, n_jobs=2)
    assert np.allclose(a.params.delta, b.params.delta, rtol=0, atol=1e-12)
    assert np.allclose(a.q_trace, b.q_trace, rtol=1e-12)


def test_fit__errors():
    data, _, spec = small_problem(12)
    with pytest.raises(ValueError):
        fit(data, spec, 1, foo=3)
    with pytest.raises(ValidationError):
        fit(data, spec, 1, backend='gibbs')
    with pytest.raises(ValidationError):
        fit(data, spec, 2)
    with pytest.warns(NoConvergenceWarning):
        model = fit(data, spec, 1, max_iter=1)
    assert not model.converged and model.iterations == 1


def test_fit__categorical_response():
    data, truth, spec = small_problem(13, n=150, r=2, d=1, response='classes', n_classes=3)
    model = fit(data, spec, 1)
    assert model.response_kind == 'categorical'
    assert model.slices.h == 3
    assert model.params.r == 2


@requires('scipy>=1.7')
def test_fit__exact_backend():
    data, _, spec = small_problem(14, n=40, p=2)
    model = fit(data, spec, 1, backend='exact', max_iter=3, budget=2**7, seed=2)
    assert model.backend == 'exact'
    again = fit(data, spec, 1, backend='exact', max_iter=3, budget=2**7, seed=2)
    assert again.q_trace == model.q_trace


def test_summarize():
    data, _, spec = small_problem(15)
    model = fit(data, spec, 1)
    summary = summarize(data, model)
    assert summary.n == data.n and summary.r == 1


@pytest.mark.parametrize('seed', [0, 1, 2, 3])
def test_fit__q_trace_nondecreasing(seed):
    data, _ = generate(SimDesign.preset('validate-estep', seed=seed))
    model = fit(data, BasisSpec.polynomial(2), 2, seed=seed)
    q = np.array(model.q_trace)
    assert len(q) == model.iterations
    assert np.all(np.diff(q)/np.abs(q[:-1]) >= -1e-3)
    summary = summarize(data, model)
    assert abs(model.q - q_value(summary, model.params)) < 1e-2*abs(model.q)


@requires('scipy>=1.7')
def test_fit__q_trace_nondecreasing__exact_backend():
    data, _, spec = small_problem(16, n=40, p=2)
    model = fit(data, spec, 1, backend='exact', max_iter=6, budget=2**7, seed=4)
    q = np.array(model.q_trace)
    assert np.all(np.diff(q)/np.abs(q[:-1]) >= -1e-8)


def test_em_trace():
    assert em_trace(-10.0, [5.0, 0.5, 0.25]) == [-10.75, -10.25, -10.0]
    assert em_trace(-3.0, [1.0]) == [-3.0]


def test_fit__max_iter():
    data, _, spec = small_problem(17)
    with pytest.raises(ValidationError):
        fit(data, spec, 1, max_iter=0)
