"""
Time integration of the filament
Two-stage exponential Runge-Kutta step built on the Poisson-kernel semigroup,
and the simulation loop that records per-step diagnostics
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from biop import remainder
from curve import (Curve, DegenerateCurveError, TraceRecord, apriori_bounds, area, c1h_norm,
                   deformation_ratio, dissipation, energy, star_norm, validate)
from initial_conditions import make_initial
from modes import coeffs, project_Pi
from spectral import SpectralPlan, get_plan, lambda_op, semigroup

logger = logging.getLogger(__name__)

STEP_TOLERANCE = 1e-9
DEGENERACY_THRESHOLD = 1e-8
ENERGY_SLACK = 1e-3
ROUNDOFF_FLOOR = 1e-11

TRACE_COLUMNS = ['t', 'energy', 'area', 'star_norm', 'c1h_pi_norm', 'a_x', 'a_y', 'a_r', 'a_t',
                 'def_ratio_0', 'max_speed', 'dissipation', 'partial_step']


class StepError(DegenerateCurveError):
    """Degeneracy inside a time step, tagged with the stage that failed"""

    def __init__(self, message: str, stage: str, index_pair: Optional[tuple] = None):
        super().__init__(f"[{stage} stage] {message}", index_pair=index_pair)
        self.stage = stage


@dataclass
class InitialSpec:
    name: str = 'demo'
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunConfig:
    """Simulation settings; defaults are N = 128, dt = 0.01"""
    n: int = 128
    dt: float = 0.01
    t_final: float = 1.0
    snapshot_every: int = 1
    initial: InitialSpec = field(default_factory=InitialSpec)
    snapshot_times: Tuple[float, ...] = ()
    degeneracy_threshold: float = DEGENERACY_THRESHOLD

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"Time step must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"Final time must be non-negative, got {self.t_final}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"Grid size must be an even integer >= 8, got {self.n}")
        if self.snapshot_every < 1:
            raise ValueError(f"Snapshot stride must be at least 1, got {self.snapshot_every}")

    def step_schedule(self) -> Tuple[int, float]:
        """Number of full steps and the length of a trailing partial step (0 if none)."""
        ratio = self.t_final / self.dt
        nearest = round(ratio)
        if abs(ratio - nearest) <= STEP_TOLERANCE * max(1.0, ratio):
            return int(nearest), 0.0
        full = int(math.floor(ratio))
        return full, self.t_final - full * self.dt


@dataclass
class RunResult:
    trace: List[TraceRecord]
    final: Curve
    snapshots: Dict[float, Curve] = field(default_factory=dict)
    status: str = 'ok'
    error: Optional[str] = None
    energy_violations: int = 0

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame([record.as_row() for record in self.trace], columns=TRACE_COLUMNS)


@dataclass
class OrderEstimate:
    order: Optional[float]
    status: str
    differences: Tuple[float, float]


def _curve_at_stage(xy: np.ndarray, stage: str) -> Curve:
    if not np.all(np.isfinite(xy)):
        raise StepError("non-finite coordinates", stage=stage)
    return Curve(xy)


def _stage_remainder(c: Curve, plan: SpectralPlan, stage: str) -> np.ndarray:
    try:
        return remainder(c, plan)
    except StepError:
        raise
    except DegenerateCurveError as e:
        raise StepError(str(e), stage=stage, index_pair=e.index_pair) from e


def _advance(xy: np.ndarray, dt: float, plan: SpectralPlan, r_n: np.ndarray) -> np.ndarray:
    """X^{n+1} from X^n given R_h(X^n)."""
    half = semigroup(plan, dt / 2.0, xy + r_n * (dt / 2.0))
    r_half = _stage_remainder(_curve_at_stage(half, 'half'), plan, 'half')
    new = semigroup(plan, dt, xy) + semigroup(plan, dt / 2.0, r_half) * dt
    if not np.all(np.isfinite(new)):
        raise StepError("non-finite coordinates", stage='update')
    return new


def step(c: Curve, dt: float, plan: Optional[SpectralPlan] = None) -> Curve:
    """
    One exponential Runge-Kutta step

    X^{n+1/2} = S(dt/2)(X^n + R(X^n) dt/2)
    X^{n+1}   = S(dt) X^n + S(dt/2) R(X^{n+1/2}) dt

    Raises:
        StepError: degeneracy at either stage
    """
    if dt < 0:
        raise ValueError(f"Time step must be non-negative, got {dt}")
    plan = plan or c.plan
    r_n = _stage_remainder(c, plan, 'initial')
    return Curve(_advance(c.xy, dt, plan, r_n))


def integrate(initial: Curve, dt: float, t_final: float) -> Curve:
    """Advance to ``t_final`` without recording diagnostics."""
    schedule = RunConfig(n=initial.n, dt=dt, t_final=t_final).step_schedule()
    full_steps, partial = schedule
    plan = initial.plan
    c = initial
    for _ in range(full_steps):
        c = step(c, dt, plan)
    if partial > 0.0:
        c = step(c, partial, plan)
    return c


def make_record(c: Curve, t: float, r_x: np.ndarray, plan: SpectralPlan,
                partial_step: bool = False) -> TraceRecord:
    """Diagnostics of state ``c`` given its remainder ``r_x``."""
    velocity = lambda_op(plan, c.xy) + r_x
    s = star_norm(c)
    return TraceRecord(
        t=t,
        energy=energy(c),
        area=area(c),
        star_norm=s,
        c1h_pi_norm=c1h_norm(project_Pi(c.xy), plan),
        coeffs=coeffs(c.xy),
        deformation_ratio_0=deformation_ratio(c, 0.0) if s > 0.0 else float('inf'),
        max_speed=float(np.max(np.linalg.norm(velocity, axis=1))),
        dissipation=dissipation(c, velocity),
        partial_step=partial_step,
    )


def _snapshot_indices(cfg: RunConfig, total_steps: int) -> Dict[int, float]:
    indices = {}
    for ts in cfg.snapshot_times:
        if ts < 0 or ts > cfg.t_final + STEP_TOLERANCE:
            logger.warning(f"Snapshot time {ts} lies outside [0, {cfg.t_final}]; skipped")
            continue
        ratio = ts / cfg.dt
        index = min(int(round(ratio)), total_steps)
        if abs(ratio - round(ratio)) > STEP_TOLERANCE * max(1.0, ratio) and ts < cfg.t_final:
            logger.warning(f"Snapshot time {ts} is not on the step grid; using t={index * cfg.dt:g}")
        if ts >= cfg.t_final - STEP_TOLERANCE:
            index = total_steps
        indices[index] = ts
    return indices


def run(cfg: RunConfig, initial: Optional[Curve] = None) -> RunResult:
    """
    Simulate from t = 0 to cfg.t_final

    Diagnostics are recorded at t = 0, every ``snapshot_every`` steps and at
    t_final. A degeneracy aborts the loop and returns the partial trace with
    status ``degenerate``.
    """
    c = initial if initial is not None else make_initial(cfg.initial.name, cfg.initial.params, cfg.n)
    if c.n != cfg.n:
        raise ValueError(f"Initial curve has n={c.n}, config expects n={cfg.n}")
    plan = get_plan(cfg.n)
    full_steps, partial = cfg.step_schedule()
    total_steps = full_steps + (1 if partial > 0.0 else 0)
    snapshot_at = _snapshot_indices(cfg, total_steps)

    trace: List[TraceRecord] = []
    snapshots: Dict[float, Curve] = {}
    violations = 0
    logger.info(f"Starting run: n={cfg.n}, dt={cfg.dt}, t_final={cfg.t_final}, "
                f"{full_steps} steps{' + partial step' if partial else ''}")

    try:
        validate(c, cfg.degeneracy_threshold)
        energy0, area0 = energy(c), area(c)
        e_prev = energy0
        for i in range(total_steps):
            t = i * cfg.dt
            r_n = _stage_remainder(c, plan, 'initial')
            if i % cfg.snapshot_every == 0:
                _append_record(trace, c, t, r_n, plan, cfg, energy0, area0)
            if i in snapshot_at:
                snapshots[snapshot_at[i]] = c

            dt = cfg.dt if i < full_steps else partial
            c = Curve(_advance(c.xy, dt, plan, r_n))

            e_new = energy(c)
            if e_new > e_prev + ENERGY_SLACK * dt * energy0:
                violations += 1
                logger.warning(f"Energy increased at t={t + dt:.4f}: {e_prev:.12e} -> {e_new:.12e}")
            e_prev = e_new

        t_end = cfg.t_final if total_steps else 0.0
        r_end = _stage_remainder(c, plan, 'initial')
        _append_record(trace, c, t_end, r_end, plan, cfg, energy0, area0, partial_step=partial > 0.0)
        if total_steps in snapshot_at:
            snapshots[snapshot_at[total_steps]] = c
    except DegenerateCurveError as e:
        logger.error(f"Run aborted after {len(trace)} records: {e}")
        return RunResult(trace=trace, final=c, snapshots=snapshots, status='degenerate',
                         error=str(e), energy_violations=violations)

    logger.info(f"✅ Run finished: {len(trace)} records, energy {trace[0].energy:.6f} -> {trace[-1].energy:.6f}")
    return RunResult(trace=trace, final=c, snapshots=snapshots, energy_violations=violations)


def _append_record(trace: List[TraceRecord], c: Curve, t: float, r_x: np.ndarray, plan: SpectralPlan,
                   cfg: RunConfig, energy0: float, area0: float, partial_step: bool = False):
    record = make_record(c, t, r_x, plan, partial_step=partial_step)
    if record.star_norm <= cfg.degeneracy_threshold:
        raise DegenerateCurveError(f"Star norm {record.star_norm:.3e} at t={t:.4f} is below threshold")
    bounds = apriori_bounds(c, energy0, area0)
    if not bounds['holds']:
        logger.warning(f"A-priori bounds violated at t={t:.4f}: {bounds}")
    logger.debug(f"t={t:.4f} energy={record.energy:.10f} area={record.area:.10f} "
                 f"pi_c1h={record.c1h_pi_norm:.3e}")
    trace.append(record)


def order_estimate(initial: Curve, t_final: float, dt0: float) -> OrderEstimate:
    """
    Observed temporal order from runs at dt0, dt0/2 and dt0/4

    Returns:
        OrderEstimate: log2 of the ratio of successive differences, or status
        ``at-roundoff`` when the differences are at machine precision
    """
    results = [integrate(initial, dt0 / 2 ** j, t_final).xy for j in range(3)]
    d1 = float(np.max(np.abs(results[0] - results[1])))
    d2 = float(np.max(np.abs(results[1] - results[2])))
    floor = ROUNDOFF_FLOOR * max(float(np.max(np.abs(initial.xy))), 1.0)
    if d1 <= floor or d2 <= floor:
        logger.info(f"Order estimate at roundoff: differences {d1:.3e}, {d2:.3e}")
        return OrderEstimate(order=None, status='at-roundoff', differences=(d1, d2))
    return OrderEstimate(order=float(np.log2(d1 / d2)), status='ok', differences=(d1, d2))
