# -*- coding: utf-8 -*-

from __future__ import (absolute_import, division, print_function)

import numpy as np


def _axes(ax, fig_kw):
    if ax is None:
        import matplotlib.pyplot as plt
        _fig, ax = plt.subplots(1, 1, **(fig_kw or {}))
    return ax


def plot_q_trace(model, ax=None, relative=False, marker='o', c='tab:blue', fig_kw=None):
    """ Plot Q after every EM iteration

    Parameters
    ----------
    model : FittedModel
    ax : Axes
    relative : bool
        Plot ``|Q_k - Q_{k-1}| / |Q_{k-1}|`` on a log scale instead.
    fig_kw : dict
        Keyword arguments passed to ``plt.subplots`` when ``ax`` is None.

    """
    ax = _axes(ax, fig_kw)
    q = np.asarray(model.q_trace)
    it = np.arange(1, q.size + 1)
    if relative:
        ax.semilogy(it[1:], np.abs(np.diff(q))/np.abs(q[:-1]), marker=marker, c=c)
        ax.set_ylabel('relative change of Q')
    else:
        ax.plot(it, q, marker=marker, c=c)
        ax.set_ylabel('Q')
    ax.set_xlabel('iteration')
    return ax


def plot_reduction(r, y, ax=None, categorical=None, cmap='viridis', s=12, fig_kw=None, legend=True):
    """ Scatter the first one or two reduced coordinates, coloured by the response

    With a single coordinate the response is put on the vertical axis.
    """
    ax = _axes(ax, fig_kw)
    r = np.asarray(r, dtype=np.float64)
    if r.ndim == 1:
        r = r[:, None]
    y = np.asarray(y)
    if categorical is None:
        categorical = y.dtype.kind not in 'biuf'
    if r.shape[1] == 1:
        if categorical:
            for lab in np.unique(y):
                sel = y == lab
                ax.scatter(r[sel, 0], np.full(sel.sum(), str(lab)), s=s, label=str(lab))
        else:
            ax.scatter(r[:, 0], y, c=y, cmap=cmap, s=s)
        ax.set_xlabel('$R_1$')
        ax.set_ylabel('y')
        return ax
    if categorical:
        for lab in np.unique(y):
            sel = y == lab
            ax.scatter(r[sel, 0], r[sel, 1], s=s, label=str(lab))
        if legend:
            ax.legend()
    else:
        sc = ax.scatter(r[:, 0], r[:, 1], c=y, cmap=cmap, s=s)
        if legend:
            ax.figure.colorbar(sc, ax=ax, label='y')
    ax.set_xlabel('$R_1$')
    ax.set_ylabel('$R_2$')
    return ax


def plot_angles(table, ax=None, prefix='angle', fig_kw=None):
    """ Box plot of the subspace angles (degrees) per method

    Parameters
    ----------
    table : pandas.DataFrame
        Benchmark results, every column starting with ``prefix`` is one box.

    """
    ax = _axes(ax, fig_kw)
    cols = [c for c in table.columns if c.startswith(prefix)]
    if not cols:
        raise ValueError("No columns starting with %r" % prefix)
    ax.boxplot([table[c].dropna().to_numpy() for c in cols])
    ax.set_xticks(range(1, len(cols) + 1))
    ax.set_xticklabels([c[len(prefix):].lstrip('_') or c for c in cols])
    ax.set_ylabel('angle / degrees')
    return ax
