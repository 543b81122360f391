# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import io
import json

import numpy as np
import pandas as pd
import pytest

from ..cli import EXIT_INPUT, EXIT_OK, build_parser, main
from ..results import FittedModel
from ._designs import small_problem


def _csv(tmp_path, n=120, seed=0, **kwargs):
    data, _, _ = small_problem(seed, n=n, xi_scale=2.0, **kwargs)
    table = pd.DataFrame(data.x, columns=data.names)
    table['y'] = data.y
    path = tmp_path / 'data.csv'
    table.to_csv(path, index=False)
    return str(path), table


def _fit(tmp_path, csv, *extra):
    model, report = str(tmp_path / 'model.json'), str(tmp_path / 'report.json')
    argv = ['fit', '-i', csv, '--response', 'y', '-d', '1', '--degree', '1', '--model', model,
            '--report', report, '--threads', '1'] + list(extra)
    return main(argv), model, report


def _last_json(text):
    return json.loads([line for line in text.splitlines() if line.strip()][-1])


def test_build_parser():
    args = build_parser().parse_args(['benchmark', 'choose-d', '--reps', '2', '-n', '50'])
    assert (args.benchmark, args.reps, args.n, args.timing) == ('choose-d', 2, 50, None)
    args = build_parser().parse_args(['fit', '--no-timing', '--lambda', '0.5'])
    assert args.timing is False and getattr(args, 'lambda') == 0.5


def test_fit(tmp_path):
    csv, _ = _csv(tmp_path)
    code, model_path, report_path = _fit(tmp_path, csv, '--seed', '3')
    assert code == EXIT_OK
    with open(model_path) as fh:
        model = FittedModel.from_json(fh.read())
    assert model.d == 1 and model.seed == 3
    assert model.names == ('X1', 'X2', 'X3')
    with open(report_path) as fh:
        report = json.load(fh)
    assert report['iterations'] == len(report['q_trace'])
    assert report['active_set'] == ['X1', 'X2', 'X3']
    assert report['lambda'] is None
    assert report['time'] > 0


def test_fit__deterministic(tmp_path):
    csv, _ = _csv(tmp_path, seed=1)
    outputs = []
    for _ in range(2):
        code, model_path, report_path = _fit(tmp_path, csv, '--no-timing')
        assert code == EXIT_OK
        with open(model_path) as fh, open(report_path) as fr:
            outputs.append((fh.read(), fr.read()))
    assert outputs[0] == outputs[1]
    assert 'time' not in json.loads(outputs[0][1])


def test_fit__lambda_grid(tmp_path):
    csv, _ = _csv(tmp_path, seed=2)
    code, _, report_path = _fit(tmp_path, csv, '--lambda-grid', '0,1e6', '--select', 'aic')
    assert code == EXIT_OK
    with open(report_path) as fh:
        report = json.load(fh)
    assert report['criterion'] == 'aic'
    assert [row['lambda'] for row in report['lambda_trace']] == [0.0, 1e6]
    assert report['lambda_trace'][1]['value'] is None
    assert report['lambda'] == 0.0


def test_fit__constant_column(tmp_path, capsys):
    csv, table = _csv(tmp_path, seed=3)
    table['C'] = 1
    table.to_csv(csv, index=False)
    code, _, _ = _fit(tmp_path, csv)
    assert code == EXIT_INPUT
    err = _last_json(capsys.readouterr().err)
    assert err['column'] == 'C'
    assert err['error'] == 'NonOrdinalColumn'


def test_fit__config_errors(tmp_path, capsys):
    csv, _ = _csv(tmp_path, seed=4)
    cfg = tmp_path / 'run.json'
    cfg.write_text(json.dumps({'dimension': 1}))
    code, _, _ = _fit(tmp_path, csv, '--config', str(cfg))
    assert code == EXIT_INPUT
    assert _last_json(capsys.readouterr().err)['key'] == 'dimension'
    assert main(['fit', '-i', csv, '--response', 'y']) == EXIT_INPUT
    assert _last_json(capsys.readouterr().err)['key'] == 'd'
    assert main(['fit', '-i', str(tmp_path / 'missing.csv'), '--response', 'y', '-d', '1']) == EXIT_INPUT
    assert main(['fit', '-i', csv, '--response', 'income', '-d', '1']) == EXIT_INPUT
    assert _last_json(capsys.readouterr().err)['column'] == 'income'


def test_reduce(tmp_path):
    csv, table = _csv(tmp_path, seed=5)
    _, model_path, _ = _fit(tmp_path, csv)
    out = str(tmp_path / 'reduced.csv')
    assert main(['reduce', '-m', model_path, '-i', csv, '-o', out, '--ses-index']) == EXIT_OK
    reduced = pd.read_csv(out)
    assert list(reduced.columns) == ['R1', 'ses_index']
    assert len(reduced) == len(table)
    assert reduced['ses_index'].min() == 0 and reduced['ses_index'].max() == 1
    assert np.corrcoef(reduced['ses_index'], table['y'])[0, 1] > 0
    small = str(tmp_path / 'small.csv')
    table.iloc[:5].to_csv(small, index=False)
    out2 = str(tmp_path / 'reduced2.csv')
    assert main(['reduce', '-m', model_path, '-i', small, '-o', out2]) == EXIT_OK
    assert np.allclose(pd.read_csv(out2)['R1'], reduced['R1'][:5], rtol=0, atol=1e-12)


def test_reduce__missing_column(tmp_path, capsys):
    csv, table = _csv(tmp_path, seed=6)
    _, model_path, _ = _fit(tmp_path, csv)
    table.drop(columns=['X2']).to_csv(csv, index=False)
    assert main(['reduce', '-m', model_path, '-i', csv]) == EXIT_INPUT
    assert _last_json(capsys.readouterr().err)['column'] == 'X2'


def test_reduce__seed(tmp_path, monkeypatch):
    csv, table = _csv(tmp_path, seed=9)
    _, model_path, _ = _fit(tmp_path, csv, '--seed', '3')
    small = str(tmp_path / 'small.csv')
    table.iloc[:5].to_csv(small, index=False)

    def reduced(*extra):
        out = str(tmp_path / 'reduced.csv')
        assert main(['reduce', '-m', model_path, '-i', small, '-o', out] + list(extra)) == EXIT_OK
        return pd.read_csv(out)['R1'].to_numpy()

    stored = reduced()
    assert np.array_equal(stored, reduced('--seed', '3'))
    other = reduced('--seed', '11')
    assert not np.array_equal(stored, other)
    monkeypatch.setenv('ORDRED_SEED', '11')
    assert np.array_equal(reduced(), other)


def test_ses_index(tmp_path, capsys):
    csv, table = _csv(tmp_path, seed=7)
    _, model_path, _ = _fit(tmp_path, csv)
    capsys.readouterr()
    assert main(['ses-index', '-m', model_path, '-i', csv]) == EXIT_OK
    index = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(index.columns) == ['ses_index']
    assert len(index) == len(table)
    assert index['ses_index'].between(0, 1).all()


def test_select_dim(tmp_path, capsys):
    csv, _ = _csv(tmp_path, seed=8)
    diag = str(tmp_path / 'diag.csv')
    capsys.readouterr()
    assert main(['select-dim', '-i', csv, '--response', 'y', '--method', 'bic', '--degree', '1',
                 '--threads', '1', '-o', diag]) == EXIT_OK
    decision = json.loads(capsys.readouterr().out)
    assert decision['method'] == 'bic' and decision['d_hat'] == 1
    assert list(pd.read_csv(diag)['d']) == [0, 1]


def test_simulate(tmp_path):
    design = tmp_path / 'design.json'
    design.write_text(json.dumps({'n': 80, 'p': 3, 'd': 1, 'r': 1, 'g': 3, 'xi_scale': 2.0}))
    out = str(tmp_path / 'sim.csv')
    assert main(['simulate', '--design', str(design), '--reps', '2', '--threads', '1', '-o', out,
                 '--no-timing']) == EXIT_OK
    rows = pd.read_csv(out)
    assert len(rows) == 2
    assert 'time' not in rows.columns
    assert (rows['angle'] < 45).all()


@pytest.mark.parametrize('bad', [['--design', 'nonexistent'], ['--design', 'three-class', '-d', '5']])
def test_simulate__errors(tmp_path, bad):
    assert main(['simulate', '--reps', '1', '--threads', '1'] + bad) == EXIT_INPUT


def test_benchmark(tmp_path, capsys):
    out = str(tmp_path / 'bench.csv')
    capsys.readouterr()
    assert main(['benchmark', 'ses-proxy', '--reps', '2', '-n', '80', '-p', '3', '--threads', '1',
                 '-o', out]) == EXIT_OK
    summary = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert 'fraction_ses_better' in set(summary['quantity'])
    assert len(pd.read_csv(out)) == 2
    assert main(['benchmark']) == EXIT_INPUT
