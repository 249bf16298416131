"""
Experiment configuration
Defaults from the environment (.env), a JSON experiment document on top, and
command-line overrides on top of that
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import load_dotenv

from integrator import InitialSpec, RunConfig
from initial_conditions import INITIAL_CONDITIONS

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

COMMANDS = ('simulate', 'decay', 'spectrum', 'fields', 'convergence')
SCHEMA_VERSION = 1

# Per-command defaults
COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    'simulate': {'init': 'demo', 't_final': 1.5, 'snapshot_times': [0.0, 0.5, 1.0, 1.5]},
    'decay': {'init': 'unlabeled', 't_final': 20.0},
    'spectrum': {'init': 'circle', 't_final': 0.0},
    'fields': {'init': 'demo', 't_final': 0.0},
    'convergence': {'init': 'demo', 't_final': 0.5},
}


def env_defaults() -> Dict[str, Any]:
    return {
        'n': int(os.getenv('PESKIN_N', '128')),
        'dt': float(os.getenv('PESKIN_DT', '0.01')),
        'output_dir': os.getenv('PESKIN_OUTPUT_DIR', 'output'),
        'log_level': os.getenv('PESKIN_LOG_LEVEL', 'INFO'),
    }


@dataclass
class FieldGridSpec:
    bounds: Tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    resolution: Tuple[int, int] = (41, 41)


@dataclass
class ConvergenceSpec:
    t_final: float = 0.5
    dt0: float = 0.02
    ns: Tuple[int, ...] = (32, 64, 128)
    reference_n: int = 512
    step_dt: float = 0.01


@dataclass
class ExperimentSpec:
    """Everything one CLI invocation needs"""
    command: str
    run: RunConfig
    output_dir: Path
    pi_window: Optional[Tuple[float, float]] = None
    dta_window: Optional[Tuple[float, float]] = None
    dta_t_max: float = 10.0
    fields: FieldGridSpec = field(default_factory=FieldGridSpec)
    k_max: int = 8
    convergence: ConvergenceSpec = field(default_factory=ConvergenceSpec)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown command '{self.command}'. Choose from {COMMANDS}")
        if self.run.initial.name not in INITIAL_CONDITIONS:
            raise ValueError(f"Unknown initial condition '{self.run.initial.name}'")
        if self.command == 'decay' and self.run.t_final <= 0.0:
            raise ValueError(f"decay needs a positive t_final, got {self.run.t_final}")
        for name, window in (('pi_window', self.pi_window), ('dta_window', self.dta_window)):
            if window is None:
                continue
            lo, hi = window
            if not 0.0 <= lo < hi <= self.run.t_final + 1e-9:
                raise ValueError(f"{name} {window} must lie within [0, {self.run.t_final}]")
        if self.k_max < 0:
            raise ValueError(f"k_max must be non-negative, got {self.k_max}")

    def echo(self) -> Dict[str, Any]:
        """Config echo for the JSON summary."""
        data = asdict(self)
        data['output_dir'] = str(self.output_dir)
        return data


def _pair(value, name: str) -> Optional[Tuple[float, float]]:
    if value is None:
        return None
    if len(value) != 2:
        raise ValueError(f"{name} must have two entries, got {value}")
    return float(value[0]), float(value[1])


def build_spec(command: str, document: Optional[Dict[str, Any]] = None,
               overrides: Optional[Dict[str, Any]] = None) -> ExperimentSpec:
    """
    Merge defaults, the JSON document and CLI overrides into an ExperimentSpec

    Args:
        command: One of simulate, decay, spectrum, fields, convergence
        document: Parsed JSON experiment document
        overrides: Non-None CLI flag values (n, dt, t_final, init, init_params, out, snapshot_every)
    """
    if command not in COMMANDS:
        raise ValueError(f"Unknown command '{command}'. Choose from {COMMANDS}")
    doc = dict(document or {})
    if doc.get('command', command) != command:
        logger.warning(f"Config document is for '{doc['command']}', running '{command}'")
    merged: Dict[str, Any] = {**env_defaults(), **COMMAND_DEFAULTS[command]}
    merged.update({key: value for key, value in doc.items() if key != 'command'})
    merged.update({key: value for key, value in (overrides or {}).items() if value is not None})

    init = merged.get('init', 'demo')
    if isinstance(init, str):
        init = {'name': init, 'params': merged.get('init_params') or {}}
    elif 'init_params' in (overrides or {}) and overrides['init_params'] is not None:
        init = {**init, 'params': overrides['init_params']}

    run_cfg = RunConfig(
        n=int(merged['n']),
        dt=float(merged['dt']),
        t_final=float(merged['t_final']),
        snapshot_every=int(merged.get('snapshot_every', 1)),
        initial=InitialSpec(name=init['name'], params=dict(init.get('params') or {})),
        snapshot_times=tuple(float(t) for t in merged.get('snapshot_times', ())),
    )

    fit = merged.get('fit', {})
    fields_doc = merged.get('fields', {})
    conv_doc = merged.get('convergence', {})
    defaults = ConvergenceSpec()
    return ExperimentSpec(
        command=command,
        run=run_cfg,
        output_dir=Path(merged.get('out') or Path(merged['output_dir']) / command),
        pi_window=_pair(fit.get('pi_window'), 'pi_window'),
        dta_window=_pair(fit.get('dta_window'), 'dta_window'),
        dta_t_max=float(fit.get('dta_t_max', min(10.0, run_cfg.t_final))),
        fields=FieldGridSpec(
            bounds=tuple(float(b) for b in fields_doc.get('bounds', FieldGridSpec.bounds)),
            resolution=tuple(int(r) for r in fields_doc.get('resolution', FieldGridSpec.resolution)),
        ),
        k_max=int(merged.get('spectrum', {}).get('k_max', 8)),
        convergence=ConvergenceSpec(
            t_final=float(conv_doc.get('t_final', defaults.t_final)),
            dt0=float(conv_doc.get('dt0', defaults.dt0)),
            ns=tuple(int(n) for n in conv_doc.get('ns', defaults.ns)),
            reference_n=int(conv_doc.get('reference_n', defaults.reference_n)),
            step_dt=float(conv_doc.get('step_dt', defaults.step_dt)),
        ),
    )


def load_document(path) -> Dict[str, Any]:
    """Read a JSON experiment document."""
    with open(path, 'r') as handle:
        document = json.load(handle)
    if not isinstance(document, dict):
        raise ValueError(f"Config {path} must hold a JSON object")
    return document


def resolve_log_level(explicit: Optional[str] = None) -> int:
    name = (explicit or env_defaults()['log_level']).upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ValueError(f"Unknown log level '{name}'")
    return level
