import json

import numpy as np
import pandas as pd
import pytest

from cli import EXIT_ARGUMENT_ERROR, EXIT_DEGENERATE, EXIT_OK, main
from config import SCHEMA_VERSION
from integrator import TRACE_COLUMNS


def read_summary(out):
    with open(out / 'summary.json') as handle:
        summary = json.load(handle)
    assert set(summary) == {'schema_version', 'command', 'status', 'config', 'metrics'}
    assert summary['schema_version'] == SCHEMA_VERSION
    return summary


def test_simulate_short_run(tmp_path):
    out = tmp_path / 'sim'
    code = main(['simulate', '--n', '32', '--dt', '0.05', '--t-final', '0.5', '--out', str(out)])
    assert code == EXIT_OK
    summary = read_summary(out)
    assert summary['status'] == 'ok'
    assert summary['config']['run']['n'] == 32
    assert summary['metrics']['snapshots'] == ['snapshot_t0.0000.csv', 'snapshot_t0.5000.csv']
    trace = pd.read_csv(out / 'trace.csv')
    assert list(trace.columns) == TRACE_COLUMNS
    assert len(trace) == 11
    snapshot = pd.read_csv(out / 'snapshot_t0.5000.csv')
    assert list(snapshot.columns) == ['theta', 'x', 'y']
    assert b'\r' not in (out / 'trace.csv').read_bytes()


def test_simulate_is_reproducible(tmp_path):
    args = ['simulate', '--n', '32', '--dt', '0.05', '--t-final', '0.2']
    assert main(args + ['--out', str(tmp_path / 'a')]) == EXIT_OK
    assert main(args + ['--out', str(tmp_path / 'b')]) == EXIT_OK
    for name in ('trace.csv', 'final.csv'):
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()


def test_spectrum(tmp_path):
    out = tmp_path / 'spectrum'
    assert main(['spectrum', '--n', '64', '--out', str(out)]) == EXIT_OK
    summary = read_summary(out)
    metrics = summary['metrics']
    assert metrics['max_abs_lambda0'] <= 1e-6
    assert metrics['max_relative_error'] <= 1e-3
    table = pd.read_csv(out / 'spectrum.csv')
    assert len(table) == 4 + 2 + 4 * 7
    primary = table[table['k'] == 1]
    np.testing.assert_allclose(primary['rayleigh'], -0.25, atol=1e-3)
    assert (primary['residual'] <= 1e-3).all()
    row = table[table['mode'] == 'cos(5t)e_t'].iloc[0]
    assert row['rayleigh'] == pytest.approx(-1.25, rel=1e-3)
    assert (table['analytic_residual'] <= 1e-3).all()


def test_fields_on_equilibrium(tmp_path):
    out = tmp_path / 'fields'
    args = ['fields', '--init', 'circle', '--out', str(out)]
    assert main(args) == EXIT_OK
    summary = read_summary(out)
    assert summary['status'] == 'ok'
    assert summary['metrics']['max_velocity'] <= 1e-8
    assert summary['metrics']['pressure_jump'] == pytest.approx(1.0, abs=1e-6)
    frame = pd.read_csv(out / 'fields.csv')
    assert list(frame.columns) == ['x', 'y', 'u1', 'u2', 'p', 'masked']
    assert len(frame) == 41 * 41
    assert summary['metrics']['masked_points'] == int(frame['masked'].sum()) > 0


def test_fields_masked_only(tmp_path):
    out = tmp_path / 'masked'
    config = tmp_path / 'fields.json'
    config.write_text(json.dumps({'init': 'circle', 'fields': {'bounds': [0.99, 1.01, -0.01, 0.01],
                                                                 'resolution': [3, 3]}}))
    assert main(['fields', '--config', str(config), '--out', str(out)]) == EXIT_OK
    summary = read_summary(out)
    assert summary['status'] == 'masked-only'
    assert summary['metrics']['masked_only']


def test_decay_on_circle_reports_roundoff(tmp_path):
    out = tmp_path / 'decay'
    args = ['decay', '--init', 'circle', '--n', '32', '--t-final', '1', '--out', str(out)]
    assert main(args) == EXIT_OK
    summary = read_summary(out)
    assert summary['status'] == 'at-roundoff'
    assert summary['metrics']['pi_fit'] is None
    assert (out / 'decay_pi.csv').exists()
    assert (out / 'decay_dta.csv').exists()


def test_exit_codes(tmp_path):
    assert main(['simulate', '--n', '7', '--out', str(tmp_path / 'a')]) == EXIT_ARGUMENT_ERROR
    assert main(['plot']) == EXIT_ARGUMENT_ERROR
    assert main(['decay', '--t-final', '0', '--out', str(tmp_path / 'c')]) == EXIT_ARGUMENT_ERROR
    assert main(['simulate', '--config', str(tmp_path / 'missing.json')]) == EXIT_ARGUMENT_ERROR
    assert main(['simulate', '--init-params', '{bad']) == EXIT_ARGUMENT_ERROR
    degenerate = ['simulate', '--init', 'circle', '--init-params', '{"A": 0, "B": 0}', '--n', '32',
                  '--out', str(tmp_path / 'b')]
    assert main(degenerate) == EXIT_DEGENERATE


@pytest.mark.slow
def test_simulate_demo_default(tmp_path):
    out = tmp_path / 'demo'
    assert main(['simulate', '--out', str(out)]) == EXIT_OK
    metrics = read_summary(out)['metrics']
    assert len(metrics['snapshots']) == 4
    assert metrics['area_drift_relative'] <= 1e-3
    assert metrics['energy_nonincreasing']


@pytest.mark.slow
def test_decay_unlabeled_slopes(tmp_path):
    out = tmp_path / 'decay'
    assert main(['decay', '--out', str(out)]) == EXIT_OK
    summary = read_summary(out)
    assert summary['status'] == 'ok'
    metrics = summary['metrics']
    assert metrics['pi_fit']['window'] == [10.0, 20.0]
    assert metrics['pi_fit']['slope'] == pytest.approx(-0.25, abs=0.01)
    assert metrics['dta_fit']['window'] == [4.0, 10.0]
    assert metrics['dta_fit']['slope'] == pytest.approx(-0.50, abs=0.03)
    assert metrics['energy_violations'] == 0
    dta = pd.read_csv(out / 'decay_dta.csv')
    assert dta['t_half'].max() <= 10.0


@pytest.mark.slow
@pytest.mark.parametrize("m", [3, 4, 5])
def test_decay_labeled_asymptotic_slope(tmp_path, m):
    out = tmp_path / f'labeled{m}'
    args = ['decay', '--init', 'labeled', '--init-params', json.dumps({'m': m}), '--out', str(out)]
    assert main(args) == EXIT_OK
    slope = read_summary(out)['metrics']['pi_fit']['slope']
    assert slope == pytest.approx(-0.25, rel=0.1)


@pytest.mark.slow
def test_convergence_demo(tmp_path):
    out = tmp_path / 'conv'
    assert main(['convergence', '--out', str(out)]) == EXIT_OK
    metrics = read_summary(out)['metrics']
    assert metrics['temporal_order'] == pytest.approx(2.0, abs=0.1)
    spatial = pd.read_csv(out / 'convergence_spatial.csv').set_index('n')
    for column in ('remainder_error', 'step_error'):
        coarse, fine = spatial.loc[64, column], spatial.loc[128, column]
        assert coarse >= 100 * fine or coarse <= 1e-11
