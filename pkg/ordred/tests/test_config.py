# -*- coding: utf-8 -*-
from __future__ import (absolute_import, division, print_function)

import json

import pytest

from ..config import ConfigError, RunConfig, defaults, load_config
from ..util import ValidationError


def test_defaults():
    fit = defaults('fit')
    assert fit['degree'] == 2 and fit['backend'] == 'approximate'
    assert 'memory_budget' not in fit
    assert 'basis' not in defaults('simulate')
    assert defaults('reduce')['memory_budget'] == 2**30


def test_defaults__environment(monkeypatch):
    monkeypatch.setenv('ORDRED_SEED', '42')
    monkeypatch.setenv('ORDRED_BACKEND', 'exact')
    fit = defaults('fit')
    assert fit['seed'] == 42 and fit['backend'] == 'exact'


def test_RunConfig__priority(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'input': 'data.csv', 'response': 'y', 'd': 1, 'max_iter': 50, 'tol': 1e-4}))
    cfg = RunConfig.build('fit', str(path), {'max_iter': 7, 'tol': None})
    assert cfg.max_iter == 7
    assert cfg.tol == 1e-4
    assert cfg.degree == 2
    assert cfg.input == 'data.csv'
    assert cfg.select is None
    assert cfg.get('lambda', 0.0) == 0.0
    with pytest.raises(AttributeError):
        cfg.ses_index


def test_RunConfig__toml(tmp_path):
    path = tmp_path / 'bench.toml'
    path.write_text('benchmark = "choose-d"\nreps = 2\nn = 60\nrho = 0.5\n')
    cfg = RunConfig.build('benchmark', str(path))
    assert (cfg.benchmark, cfg.reps, cfg.n, cfg.rho) == ('choose-d', 2, 60, 0.5)


def test_RunConfig__simulate_design_table(tmp_path):
    path = tmp_path / 'sim.toml'
    path.write_text('reps = 1\n[design]\npreset = "three-class"\nn = 40\n')
    cfg = RunConfig.build('simulate', str(path))
    assert cfg.design == {'preset': 'three-class', 'n': 40}


@pytest.mark.parametrize('command,options,key', [
    ('fit', {'input': 'a.csv', 'response': 'y', 'd': 1, 'dimension': 2}, 'dimension'),
    ('fit', {'input': 'a.csv', 'response': 'y'}, 'd'),
    ('fit', {'input': 'a.csv', 'response': 'y', 'd': -1}, 'd'),
    ('fit', {'input': 'a.csv', 'response': 'y', 'd': 1.5}, 'd'),
    ('fit', {'input': 'a.csv', 'response': 'y', 'd': 1, 'backend': 'gibbs'}, 'backend'),
    ('fit', {'input': 'a.csv', 'response': 'y', 'd': 1, 'lambda': -0.1}, 'lambda'),
    ('fit', {'input': 'a.csv', 'response': 'y', 'd': 1, 'timing': 'yes'}, 'timing'),
    ('select-dim', {'input': 'a.csv', 'response': 'y', 'level': 2.0}, 'level'),
    ('reduce', {'model': 'm.json', 'input': 'a.csv', 'd': 1}, 'd'),
    ('benchmark', {'benchmark': 'speed-test'}, 'benchmark'),
])
def test_RunConfig__errors(command, options, key):
    with pytest.raises(ConfigError) as exc:
        RunConfig(command, options)
    assert exc.value.key == key
    assert isinstance(exc.value, ValidationError)


def test_RunConfig__coercion():
    cfg = RunConfig('fit', {'input': 'a.csv', 'response': 'y', 'd': 2.0, 'predictors': 'a, b,c',
                            'lambda_grid': '0.1,1'})
    assert cfg.d == 2
    assert cfg.predictors == ['a', 'b', 'c']
    assert cfg.lambda_grid == [0.1, 1.0]
    with pytest.raises(ConfigError):
        RunConfig('nonexistent', {})


def test_load_config__errors(tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_text('{"reps": ')
    with pytest.raises(ConfigError):
        load_config(str(bad))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.toml'))
    scalar = tmp_path / 'scalar.json'
    scalar.write_text('3')
    with pytest.raises(ConfigError):
        load_config(str(scalar))


def test_defaults__reduction_seed(monkeypatch):
    monkeypatch.delenv('ORDRED_SEED', raising=False)
    assert 'seed' not in defaults('reduce') and 'seed' not in defaults('ses-index')
    assert RunConfig.build('reduce', flags={'model': 'm.json', 'input': 'x.csv'}).seed is None
    monkeypatch.setenv('ORDRED_SEED', '5')
    assert defaults('ses-index')['seed'] == 5
