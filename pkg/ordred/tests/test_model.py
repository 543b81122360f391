# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import numpy as np
import pandas as pd
import pytest

from ..model import (BasisSpec, DegenerateBasis, InvalidParams, InvalidSlice, MissingValue, ModelParams,
                     NonOrdinalColumn, OrdinalDataset, ThresholdSet, UnknownColumn, build_basis,
                     validate_dataset)
from ..util import ValidationError


def _table():
    return pd.DataFrame({
        'edu': ['low', 'high', 'mid', 'mid', 'low', 'high'],
        'rooms': [1, 3, 2, 5, 1, 2],
        'y': [0.1, 2.0, 1.1, 1.5, -0.2, 0.7],
    })


def test_validate_dataset():
    data = validate_dataset(_table(), {'response': 'y', 'levels': {'edu': ['low', 'mid', 'high']}})
    assert data.names == ('edu', 'rooms')
    assert data.x[:, 0].tolist() == [1, 3, 2, 2, 1, 3]
    assert data.x[:, 1].tolist() == [1, 3, 2, 4, 1, 2]
    assert data.levels[1] == (1, 2, 3, 5)
    assert data.n_thresholds == 2 + 3
    assert not data.categorical


def test_validate_dataset__errors():
    df = _table()
    with pytest.raises(ValidationError):
        validate_dataset(df, {'response': 'y'})  # string labels without declared order
    with pytest.raises(UnknownColumn) as exc:
        validate_dataset(df, {'response': 'income'})
    assert exc.value.column == 'income'
    df2 = df.assign(const=1)
    with pytest.raises(NonOrdinalColumn) as exc:
        validate_dataset(df2, {'response': 'y', 'predictors': ['rooms', 'const']})
    assert exc.value.column == 'const'
    df3 = df.copy()
    df3.loc[2, 'rooms'] = np.nan
    with pytest.raises(MissingValue) as exc:
        validate_dataset(df3, {'response': 'y', 'predictors': ['rooms']})
    assert exc.value.column == 'rooms'
    with pytest.raises(ValidationError):
        validate_dataset(df, {'response': 'y', 'colour': 'blue'})


def test_recode_invariance():
    rng = np.random.default_rng(3)
    codes = rng.integers(1, 5, size=(50, 2))
    codes[:4] = [[1, 1], [2, 2], [3, 3], [4, 4]]
    y = rng.standard_normal(50)
    a = OrdinalDataset.from_codes(codes, y)
    b = OrdinalDataset.from_codes(10*codes + 7, y)
    assert np.array_equal(a.x, b.x)
    assert b.levels[0] == (17, 27, 37, 47)


def test_unobserved_declared_level_is_merged():
    x = np.array([['a', 1], ['c', 2], ['a', 1], ['c', 2]], dtype=object)
    data = OrdinalDataset.from_codes(x, [1.0, 2.0, 3.0, 4.0], levels=[['a', 'b', 'c'], None])
    assert data.levels[0] == ('a', 'c')
    assert data.merges['X1'] == {'b': 'a'}
    assert data.encode([['b', 2]]).tolist() == [[1, 2]]


def test_take_recodes():
    x = np.array([[1, 1], [2, 2], [3, 1], [1, 2]])
    data = OrdinalDataset.from_codes(x, [0.0, 1.0, 2.0, 3.0])
    sub = data.take([0, 1, 3])
    assert sub.x[:, 0].tolist() == [1, 2, 1]
    assert sub.merges['X1'] == {3: 2}


def test_ThresholdSet():
    th = ThresholdSet([[-1.0, 0.5], [0.0]])
    assert th.g.tolist() == [3, 2]
    lower, upper = th.cell([[1, 2], [3, 1]])
    assert lower.tolist() == [[-np.inf, 0.0], [0.5, -np.inf]]
    assert upper.tolist() == [[-1.0, np.inf], [np.inf, 0.0]]
    with pytest.raises(ValidationError):
        ThresholdSet([[0.5, 0.5]])
    with pytest.raises(ValidationError):
        th.cell([4, 1])


def test_ModelParams():
    params = ModelParams(np.eye(3), np.eye(3)[:, :2], [[1.0, 0.0], [0.0, 2.0]])
    assert params.psi.shape == (3, 2)
    assert params.xi_full_rank
    rot = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(params.rotated(rot).psi, params.psi)
    with pytest.raises(InvalidParams):
        ModelParams(2*np.eye(3), np.eye(3)[:, :1], [[1.0]])
    with pytest.raises(InvalidParams):
        ModelParams(np.eye(3), 2*np.eye(3)[:, :1], [[1.0]])
    with pytest.raises(InvalidParams):
        ModelParams(np.eye(3), np.eye(3)[:, :2], [[1.0], [1.0]])  # d > r
    ModelParams(2*np.eye(3), np.eye(3)[:, :1], [[1.0]], strict=False)


def test_BasisSpec():
    assert BasisSpec.polynomial(3).r == 3
    assert BasisSpec.slices().r is None
    assert BasisSpec.from_dict(BasisSpec.slices(5).to_dict()) == BasisSpec.slices(5)
    with pytest.raises(ValidationError):
        BasisSpec.polynomial(0)
    with pytest.raises(ValidationError):
        BasisSpec('spline', degree=2)


def test_build_basis__polynomial():
    y = np.array([-1.0, 0.0, 1.0, 2.0])
    basis = build_basis(y, BasisSpec.polynomial(2))
    assert np.allclose(basis.F.sum(axis=0), 0)
    assert np.allclose(basis.evaluate(y), basis.F)
    with pytest.raises(DegenerateBasis):
        build_basis(np.ones(4), BasisSpec.polynomial(1))


def test_build_basis__slices():
    y = np.array([3.0, 1.0, 4.0, 1.5, 9.0, 2.6])
    basis = build_basis(y, BasisSpec.slices(3), categorical=False)
    assert basis.r == 2
    assert np.allclose(basis.F.sum(axis=0), 0)
    with pytest.raises(InvalidSlice):
        build_basis(y, BasisSpec.slices(7), categorical=False)
    cat = build_basis(np.array(['a', 'b', 'c', 'a']), BasisSpec.slices())
    assert cat.spec.h == 3 and cat.categories == ('a', 'b', 'c')
    with pytest.raises(InvalidSlice):
        build_basis(np.array(['a', 'b', 'c', 'a']), BasisSpec.slices(2))
