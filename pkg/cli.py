"""
Experiment runner and data exporter
simulate | decay | spectrum | fields | convergence, each writing plot-ready
CSV files and a JSON summary into its output directory
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from biop import field_at, field_grid, linearize_rhs, remainder
from config import COMMANDS, SCHEMA_VERSION, ExperimentSpec, build_spec, load_document, resolve_log_level
from curve import CSV_FLOAT_FORMAT, DegenerateCurveError, write_csv
from initial_conditions import make_initial
from integrator import RunResult, order_estimate, run, step
from modes import (WindowError, decay_metrics, default_windows, eigenmodes, fit_slope, inner,
                   linearized_circle_operator)
from spectral import get_plan

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ARGUMENT_ERROR = 1
EXIT_DEGENERATE = 2
ROUNDOFF_PI_NORM = 1e-8


def write_frame(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {path}")


def write_summary(spec: ExperimentSpec, status: str, metrics: Dict[str, Any]) -> Dict[str, Any]:
    """JSON summary: schema_version, command, status, config echo, metrics."""
    summary = {
        'schema_version': SCHEMA_VERSION,
        'command': spec.command,
        'status': status,
        'config': spec.echo(),
        'metrics': metrics,
    }
    path = spec.output_dir / 'summary.json'
    with open(path, 'w', newline='\n') as handle:
        json.dump(summary, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write('\n')
    logger.info(f"Wrote {path}")
    return summary


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


def _run_metrics(result: RunResult) -> Dict[str, Any]:
    first, last = result.trace[0], result.trace[-1]
    return {
        'records': len(result.trace),
        't_reached': last.t,
        'energy_initial': first.energy,
        'energy_final': last.energy,
        'energy_violations': result.energy_violations,
        'energy_nonincreasing': result.energy_violations == 0,
        'area_initial': first.area,
        'area_final': last.area,
        'area_drift_relative': abs(last.area - first.area) / abs(first.area) if first.area else None,
        'star_norm_min': min(record.star_norm for record in result.trace),
        'error': result.error,
    }


def _uniform_prefix(trace: List) -> List:
    """Drop a trailing record whose stride differs from the rest."""
    if len(trace) < 3:
        return trace
    stride = trace[1].t - trace[0].t
    last = trace[-1].t - trace[-2].t
    if abs(last - stride) > 1e-9 * max(abs(stride), 1.0):
        return trace[:-1]
    return trace


def cmd_simulate(spec: ExperimentSpec) -> Dict[str, Any]:
    """Run the configured experiment, writing the trace and curve snapshots."""
    result = run(spec.run)
    write_frame(result.trace_frame(), spec.output_dir / 'trace.csv')
    written = []
    for t, c in sorted(result.snapshots.items()):
        path = spec.output_dir / f"snapshot_t{t:.4f}.csv"
        write_csv(c, path)
        written.append(path.name)
    write_csv(result.final, spec.output_dir / 'final.csv')
    metrics = {**_run_metrics(result), 'snapshots': written} if result.trace else {'error': result.error}
    status = 'ok' if result.status == 'ok' else 'partial'
    return write_summary(spec, status, metrics)


def cmd_decay(spec: ExperimentSpec) -> Dict[str, Any]:
    """Decay experiment: ||Pi_h X||_{C1_h} and |D_t a| series with fitted slopes."""
    result = run(spec.run)
    write_frame(result.trace_frame(), spec.output_dir / 'trace.csv')
    if len(result.trace) < 2:
        return write_summary(spec, 'partial', {'error': result.error})

    pi_series, dta_series = decay_metrics(_uniform_prefix(result.trace))
    dta_series = dta_series[dta_series['t_half'] <= spec.dta_t_max + 1e-9]
    write_frame(pi_series, spec.output_dir / 'decay_pi.csv')
    write_frame(dta_series, spec.output_dir / 'decay_dta.csv')

    t_reached = result.trace[-1].t
    windows = default_windows(t_reached, min(spec.dta_t_max, t_reached))
    pi_window = spec.pi_window or windows['pi']
    dta_window = spec.dta_window or windows['dta']
    metrics = _run_metrics(result)
    status = 'ok' if result.status == 'ok' else 'partial'

    if result.trace[0].c1h_pi_norm <= ROUNDOFF_PI_NORM:
        logger.info("Initial curve is an equilibrium to roundoff; no decay slope claimed")
        metrics.update({'pi_fit': None, 'dta_fit': None})
        return write_summary(spec, 'at-roundoff' if status == 'ok' else status, metrics)

    for key, series, column, time_column, window in (
            ('pi_fit', pi_series, 'log_pi_c1h', 't', pi_window),
            ('dta_fit', dta_series, 'log_dta', 't_half', dta_window)):
        try:
            fit = fit_slope(series[time_column].to_numpy(), series[column].to_numpy(), *window)
            metrics[key] = fit.as_dict()
            logger.info(f"{key}: slope {fit.slope:.5f} +/- {fit.stderr:.2e} on {list(window)}")
        except WindowError as e:
            logger.warning(f"{key} not fitted: {e}")
            metrics[key] = {'error': str(e), 'window': list(window)}
            status = 'window-error' if status == 'ok' else status
    return write_summary(spec, status, metrics)


def cmd_spectrum(spec: ExperimentSpec) -> Dict[str, Any]:
    """Rayleigh quotients of the finite-difference linearization about the unit circle."""
    n = spec.run.n
    plan = get_plan(n)
    base = make_initial('circle', {'A': 1.0}, n)
    rows = []
    for k in range(spec.k_max + 1):
        expected = -k / 4.0
        for label, v in eigenmodes(n, k):
            lv = linearize_rhs(base, v, plan=plan)
            vv = inner(v, v)
            quotient = inner(lv, v) / vv
            resid = lv - expected * v
            analytic = lv - linearized_circle_operator(plan, v)
            rows.append({
                'k': k,
                'mode': label,
                'expected': expected,
                'rayleigh': quotient,
                'residual': float(np.sqrt(inner(resid, resid) / vv)),
                'analytic_residual': float(np.sqrt(inner(analytic, analytic) / vv)),
            })
    frame = pd.DataFrame(rows)
    write_frame(frame, spec.output_dir / 'spectrum.csv')

    zero = frame[frame['k'] == 0]
    rest = frame[frame['k'] > 0]
    metrics = {
        'max_abs_lambda0': float(zero['rayleigh'].abs().max()),
        'max_relative_error': float(((rest['rayleigh'] - rest['expected']).abs() / rest['expected'].abs()).max())
        if len(rest) else None,
        'max_residual': float(frame['residual'].max()),
        'rows': frame.to_dict(orient='records'),
    }
    return write_summary(spec, 'ok', metrics)


def cmd_fields(spec: ExperimentSpec) -> Dict[str, Any]:
    """Velocity and pressure on a lattice around the curve at t_final."""
    result = run(replace(spec.run, snapshot_every=max(1, spec.run.step_schedule()[0])))
    c = result.final
    plan = get_plan(c.n)
    x_min, x_max, y_min, y_max = spec.fields.bounds
    nx, ny = spec.fields.resolution
    frame = field_grid(c, plan, np.linspace(x_min, x_max, nx), np.linspace(y_min, y_max, ny))
    write_frame(frame, spec.output_dir / 'fields.csv')
    write_csv(c, spec.output_dir / 'curve.csv')

    unmasked = frame[frame['masked'] == 0]
    center = c.xy.mean(axis=0)
    radius = float(np.max(np.linalg.norm(c.xy - center, axis=1)))
    inside = field_at(c, plan, center)
    outside = field_at(c, plan, center + np.array([10.0 * radius, 0.0]))
    jump = None if inside.near_curve or outside.near_curve else inside.p - outside.p
    metrics = {
        't': result.trace[-1].t if result.trace else None,
        'points': len(frame),
        'masked_points': int(frame['masked'].sum()),
        'masked_only': bool(unmasked.empty),
        'max_velocity': _finite_or_none(np.hypot(unmasked['u1'], unmasked['u2']).max()) if len(unmasked) else None,
        'pressure_jump': jump,
    }
    if unmasked.empty:
        status = 'masked-only'
    else:
        status = 'ok' if result.status == 'ok' else 'partial'
    return write_summary(spec, status, metrics)


def cmd_convergence(spec: ExperimentSpec) -> Dict[str, Any]:
    """Temporal Richardson table and spatial N-doubling error table."""
    conv = spec.convergence
    init = spec.run.initial
    initial = make_initial(init.name, init.params, spec.run.n)
    estimate = order_estimate(initial, conv.t_final, conv.dt0)
    temporal = pd.DataFrame({
        'dt': [conv.dt0, conv.dt0 / 2],
        'difference': list(estimate.differences),
    })
    write_frame(temporal, spec.output_dir / 'convergence_temporal.csv')

    reference = make_initial(init.name, init.params, conv.reference_n)
    ref_remainder = remainder(reference)
    ref_step = step(reference, conv.step_dt).xy
    rows = []
    for n in conv.ns:
        if conv.reference_n % n:
            raise ValueError(f"Reference grid {conv.reference_n} is not a multiple of {n}")
        stride = conv.reference_n // n
        c = make_initial(init.name, init.params, n)
        rows.append({
            'n': n,
            'remainder_error': float(np.max(np.abs(remainder(c) - ref_remainder[::stride]))),
            'step_error': float(np.max(np.abs(step(c, conv.step_dt).xy - ref_step[::stride]))),
        })
    spatial = pd.DataFrame(rows)
    spatial['remainder_ratio'] = spatial['remainder_error'].shift(1) / spatial['remainder_error']
    spatial['step_ratio'] = spatial['step_error'].shift(1) / spatial['step_error']
    write_frame(spatial, spec.output_dir / 'convergence_spatial.csv')

    metrics = {
        'temporal_order': estimate.order,
        'temporal_status': estimate.status,
        'differences': list(estimate.differences),
        'spatial': spatial.replace({np.nan: None}).to_dict(orient='records'),
    }
    return write_summary(spec, 'ok' if estimate.status == 'ok' else estimate.status, metrics)


COMMAND_HANDLERS = {
    'simulate': cmd_simulate,
    'decay': cmd_decay,
    'spectrum': cmd_spectrum,
    'fields': cmd_fields,
    'convergence': cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='peskin', description='Elastic filament in Stokes flow simulator')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', help='JSON experiment document')
    parser.add_argument('--n', type=int, help='grid size (even, >= 8)')
    parser.add_argument('--dt', type=float, help='time step')
    parser.add_argument('--t-final', dest='t_final', type=float, help='end time')
    parser.add_argument('--init', help='initial condition name')
    parser.add_argument('--init-params', dest='init_params', type=json.loads,
                        help='initial condition parameters as a JSON object')
    parser.add_argument('--snapshot-every', dest='snapshot_every', type=int, help='trace stride in steps')
    parser.add_argument('--out', help='output directory')
    parser.add_argument('--log-level', dest='log_level', help='DEBUG, INFO, WARNING, ...')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ARGUMENT_ERROR

    try:
        logging.basicConfig(level=resolve_log_level(args.log_level))
        document = load_document(args.config) if args.config else None
        overrides = {key: getattr(args, key) for key in
                     ('n', 'dt', 't_final', 'init', 'init_params', 'snapshot_every', 'out')}
        spec = build_spec(args.command, document, overrides)
        spec.output_dir.mkdir(parents=True, exist_ok=True)
        summary = COMMAND_HANDLERS[args.command](spec)
    except DegenerateCurveError as e:
        logger.error(f"Degenerate configuration: {e}")
        return EXIT_DEGENERATE
    except (ValueError, OSError, json.JSONDecodeError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_ARGUMENT_ERROR

    logger.info(f"✅ {args.command} finished with status '{summary['status']}' in {spec.output_dir}")
    return EXIT_DEGENERATE if summary['status'] == 'partial' else EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
