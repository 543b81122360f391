# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import numpy as np
import pandas as pd
import pytest

from ..plotting import plot_angles, plot_q_trace, plot_reduction
from ..results import FittedModel
from ..util import requires
from ._designs import tiny_model


def _use_agg():
    import matplotlib
    matplotlib.use('Agg')


@requires('matplotlib')
def test_plot_q_trace():
    _use_agg()
    model = tiny_model()
    trace = FittedModel(model.params, model.thresholds, model.basis, [-5.0, -4.0, -3.9], True, 3,
                        'approximate', 0, model.slices, model.names, model.levels)
    ax = plot_q_trace(trace)
    assert ax.get_xlabel() == 'iteration'
    ax = plot_q_trace(trace, relative=True, fig_kw=dict(figsize=(4, 3)))
    assert ax.get_yscale() == 'log'


@requires('matplotlib')
def test_plot_reduction():
    _use_agg()
    rng = np.random.default_rng(0)
    r = rng.standard_normal((30, 2))
    ax = plot_reduction(r, r[:, 0])
    assert ax.get_ylabel() == '$R_2$'
    ax = plot_reduction(r[:, 0], np.array(['a', 'b', 'c']*10))
    assert ax.get_ylabel() == 'y'
    plot_reduction(r, np.array([0, 1, 2]*10), categorical=True, legend=False)


@requires('matplotlib')
def test_plot_angles():
    _use_agg()
    table = pd.DataFrame({'angle_pfc': [10.0, 12.0], 'angle_ord': [8.0, 9.0], 'time': [1.0, 2.0]})
    ax = plot_angles(table)
    assert [t.get_text() for t in ax.get_xticklabels()] == ['pfc', 'ord']
    with pytest.raises(ValueError):
        plot_angles(table, prefix='mse')
