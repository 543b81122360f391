# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import numpy as np
import pytest

from ..em import fit, m_step, summarize
from ..model import BasisSpec
from ..regularize import (AllRowsKilled, fit_penalized_alpha, lambda_grid, lambda_max,
                          penalized_objective, select_lambda)
from ..simulate import SimDesign, generate, subspace_angle
from ..util import ValidationError
from ._designs import small_problem


def _sparse_problem(seed=0, n=300):
    alpha = np.zeros((6, 1))
    alpha[:2] = 1
    design = SimDesign(n=n, p=6, d=1, r=1, alpha_rule='explicit', alpha=alpha, c=1.0, rho=0.0, g=4,
                       seed=seed, xi_scale=2.0)
    data, truth = generate(design)
    return data, truth, BasisSpec.polynomial(1)


def _summary(seed=0):
    data, truth, spec = small_problem(seed, n=150)
    model = fit(data, spec, 1)
    return data, spec, model, summarize(data, model)


def test_fit_penalized_alpha__zero_penalty():
    _, _, model, summary = _summary(1)
    res = fit_penalized_alpha(summary, 1, 0.0)
    assert np.allclose(res.alpha.T @ summary.S @ res.alpha, np.eye(1))
    assert subspace_angle(res.alpha, m_step(summary, 1, rescale=False).alpha) < 1e-4
    assert np.isclose(res.objective, penalized_objective(summary, res.alpha, 0.0))
    assert res.active_set == (0, 1, 2)


def test_fit_penalized_alpha__constraint_and_descent():
    _, _, model, summary = _summary(2)
    lam = 0.3*lambda_max(summary, 1)
    res = fit_penalized_alpha(summary, 1, lam)
    assert not res.all_killed
    assert np.allclose(res.alpha.T @ summary.S @ res.alpha, np.eye(1))
    unpen = fit_penalized_alpha(summary, 1, 0.0)
    assert res.objective <= penalized_objective(summary, unpen.alpha, lam) + 1e-8
    with pytest.raises(ValidationError):
        fit_penalized_alpha(summary, 1, -1.0)


def test_lambda_max():
    _, _, _, summary = _summary(3)
    lam = lambda_max(summary, 1)
    assert lam > 0
    assert fit_penalized_alpha(summary, 1, 1.01*lam).all_killed
    assert not fit_penalized_alpha(summary, 1, 0.99*lam).all_killed
    assert lambda_max(summary, 0) == 0.0


def test_lambda_grid():
    grid = lambda_grid(1.0, num=5, ratio=1e-4)
    assert len(grid) == 5
    assert np.isclose(grid[0], 1e-4) and np.isclose(grid[-1], 1.0)
    assert all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValidationError):
        lambda_grid(0.0)


def test_fit__penalized():
    data, truth, spec = _sparse_problem(4)
    base = fit(data, spec, 1)
    lam = 0.5*lambda_max(summarize(data, base), 1)
    model = fit(data, spec, 1, lam=lam)
    assert model.lam == lam
    assert set(model.active_set) < set(range(data.p))
    assert np.allclose(model.params.alpha[np.setdiff1d(range(data.p), model.active_set)], 0)
    with pytest.raises(AllRowsKilled) as exc:
        fit(data, spec, 1, lam=1e6)
    assert exc.value.lam == 1e6


def test_select_lambda():
    data, truth, spec = _sparse_problem(5)
    res = select_lambda(data, spec, 1, criterion='bic', seed=1)
    assert set(truth.active) <= set(res.active_set)
    assert len(res.criterion_trace) == 31
    assert res.criterion_trace[0][0] == 0.0
    assert res.model.info['lambda_max'] > 0
    assert res.lam in [lam for lam, _ in res.criterion_trace]


def test_select_lambda__explicit_grid():
    data, truth, spec = _sparse_problem(6, n=200)
    res = select_lambda(data, spec, 1, grid=[0.0, 1e6], criterion='aic', warm_start=True)
    assert res.lam == 0.0
    assert res.criterion_trace[1][1] == float('inf')
    with pytest.raises(ValidationError):
        select_lambda(data, spec, 1, grid=[1.0, 0.5])
    with pytest.raises(ValidationError):
        select_lambda(data, spec, 1, criterion='gcv')
    with pytest.raises(AllRowsKilled):
        select_lambda(data, spec, 1, grid=[1e6])
