import json
import logging
from pathlib import Path

import pytest

from config import COMMAND_DEFAULTS, build_spec, load_document, resolve_log_level


def test_defaults():
    spec = build_spec('decay')
    assert spec.run.n == 128
    assert spec.run.dt == 0.01
    assert spec.run.t_final == 20.0
    assert spec.run.initial.name == 'unlabeled'
    assert spec.dta_t_max == 10.0
    assert spec.output_dir == Path('output') / 'decay'


def test_precedence(monkeypatch, tmp_path):
    monkeypatch.setenv('PESKIN_N', '64')
    monkeypatch.setenv('PESKIN_OUTPUT_DIR', str(tmp_path))
    assert build_spec('simulate').run.n == 64
    assert build_spec('simulate').output_dir == tmp_path / 'simulate'
    assert build_spec('simulate', {'n': 32}).run.n == 32
    assert build_spec('simulate', {'n': 32}, {'n': 16, 'dt': None}).run.n == 16


def test_init_forms():
    spec = build_spec('decay', {'init': {'name': 'labeled', 'params': {'m': 4}}})
    assert spec.run.initial.name == 'labeled'
    assert spec.run.initial.params == {'m': 4}
    spec = build_spec('decay', {'init': {'name': 'labeled', 'params': {'m': 4}}}, {'init_params': {'m': 5}})
    assert spec.run.initial.params == {'m': 5}
    spec = build_spec('fields', None, {'init': 'circle', 'init_params': {'A': 2.0}})
    assert spec.run.initial.params == {'A': 2.0}


def test_simulate_snapshot_times():
    assert build_spec('simulate').run.snapshot_times == tuple(COMMAND_DEFAULTS['simulate']['snapshot_times'])


def test_sections():
    document = {
        'fit': {'pi_window': [5, 10], 'dta_window': [2, 5], 'dta_t_max': 5},
        'fields': {'bounds': [-1, 1, -3, 3], 'resolution': [11, 21]},
        'spectrum': {'k_max': 4},
        'convergence': {'ns': [16, 32], 'reference_n': 64},
        't_final': 10.0,
    }
    spec = build_spec('decay', document)
    assert spec.pi_window == (5.0, 10.0)
    assert spec.dta_window == (2.0, 5.0)
    assert spec.fields.resolution == (11, 21)
    assert spec.k_max == 4
    assert spec.convergence.ns == (16, 32)
    json.dumps(spec.echo())


@pytest.mark.parametrize("document", [
    {'fit': {'pi_window': [10, 30]}},
    {'fit': {'pi_window': [1, 2, 3]}},
    {'init': 'ellipse'},
    {'spectrum': {'k_max': -1}},
    {'n': 30, 'dt': 0.01, 'snapshot_every': 0},
    {'t_final': 0.0},
])
def test_invalid_documents(document):
    with pytest.raises(ValueError):
        build_spec('decay', document)


def test_unknown_command():
    with pytest.raises(ValueError):
        build_spec('plot')


def test_command_mismatch_only_warns(caplog):
    with caplog.at_level(logging.WARNING):
        spec = build_spec('spectrum', {'command': 'decay'})
    assert spec.command == 'spectrum'
    assert "running 'spectrum'" in caplog.text


def test_load_document(tmp_path):
    path = tmp_path / 'exp.json'
    path.write_text(json.dumps({'n': 64}))
    assert load_document(path) == {'n': 64}
    path.write_text('[1, 2]')
    with pytest.raises(ValueError):
        load_document(path)
    path.write_text('{not json')
    with pytest.raises(json.JSONDecodeError):
        load_document(path)


def test_resolve_log_level(monkeypatch):
    assert resolve_log_level('debug') == logging.DEBUG
    assert resolve_log_level() == logging.INFO
    monkeypatch.setenv('PESKIN_LOG_LEVEL', 'WARNING')
    assert resolve_log_level() == logging.WARNING
    with pytest.raises(ValueError):
        resolve_log_level('loud')


@pytest.mark.parametrize("path", sorted((Path(__file__).resolve().parent.parent / 'experiments').glob('*.json')))
def test_shipped_experiments_load(path):
    document = load_document(path)
    spec = build_spec(document['command'], document)
    assert spec.command == document['command']
