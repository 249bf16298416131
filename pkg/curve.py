"""
Filament state and geometric diagnostics
Star norm, enclosed area, elastic energy, Hölder seminorm, deformation ratio
and the discrete C1 norm of a closed curve sampled on the uniform grid
"""

import hashlib
import io
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
import pandas as pd

from spectral import SpectralPlan, derivative, get_plan, second_derivative

if TYPE_CHECKING:
    from modes import ModeCoeffs

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


class DegenerateCurveError(ValueError):
    """Raised when a configuration has coincident nodes or a vanishing tangent."""

    def __init__(self, message: str, index_pair: Optional[tuple] = None):
        super().__init__(message)
        self.index_pair = index_pair


@dataclass(frozen=True, eq=False)
class Curve:
    """Closed planar filament X(theta_k), stored as an (n, 2) array of points."""
    xy: np.ndarray = field(repr=False)

    def __post_init__(self):
        xy = np.array(self.xy, dtype=float)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise ValueError(f"Curve points must have shape (n, 2), got {xy.shape}")
        if not np.all(np.isfinite(xy)):
            raise ValueError("Curve coordinates must be finite")
        get_plan(xy.shape[0])
        xy.setflags(write=False)
        object.__setattr__(self, "xy", xy)

    @classmethod
    def from_xy(cls, x: np.ndarray, y: np.ndarray) -> "Curve":
        return cls(np.column_stack([x, y]))

    @property
    def n(self) -> int:
        return self.xy.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.xy[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xy[:, 1]

    @property
    def plan(self) -> SpectralPlan:
        return get_plan(self.n)

    def scaled(self, a: float) -> "Curve":
        return Curve(a * self.xy)

    def translated(self, offset) -> "Curve":
        return Curve(self.xy + np.asarray(offset, dtype=float))

    def rotated(self, angle: float) -> "Curve":
        c, s = np.cos(angle), np.sin(angle)
        return Curve(self.xy @ np.array([[c, s], [-s, c]]))

    def __repr__(self):
        return f"Curve(n={self.n})"


@dataclass
class TraceRecord:
    """One row of per-step diagnostics"""
    t: float
    energy: float
    area: float
    star_norm: float
    c1h_pi_norm: float
    coeffs: "ModeCoeffs"
    deformation_ratio_0: float
    max_speed: float
    dissipation: float = 0.0
    partial_step: bool = False

    def as_row(self) -> dict:
        return {
            't': self.t,
            'energy': self.energy,
            'area': self.area,
            'star_norm': self.star_norm,
            'c1h_pi_norm': self.c1h_pi_norm,
            'a_x': self.coeffs.a_x,
            'a_y': self.coeffs.a_y,
            'a_r': self.coeffs.a_r,
            'a_t': self.coeffs.a_t,
            'def_ratio_0': self.deformation_ratio_0,
            'max_speed': self.max_speed,
            'dissipation': self.dissipation,
            'partial_step': int(self.partial_step),
        }


def _circle_distance(n: int) -> np.ndarray:
    """Pairwise periodic parameter distance min(|k-l|, n-|k-l|)*h."""
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(gap, n - gap) * (2.0 * np.pi / n)


def _pointwise_norm(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.abs(v) if v.ndim == 1 else np.linalg.norm(v, axis=-1)


def star_norm(c: Curve) -> float:
    """
    Discrete arc-chord constant min_{k != l} |X_k - X_l| / d(theta_k, theta_l)

    Returns:
        float: 0.0 when two nodes coincide
    """
    chord = np.linalg.norm(c.xy[:, None, :] - c.xy[None, :, :], axis=-1)
    dist = _circle_distance(c.n)
    np.fill_diagonal(dist, 1.0)
    ratio = chord / dist
    np.fill_diagonal(ratio, np.inf)
    return float(np.min(ratio))


def area(c: Curve) -> float:
    """Signed enclosed area, positive for counter-clockwise curves."""
    plan = c.plan
    d = derivative(plan, c.xy)
    value = 0.5 * np.sum(c.x * d[:, 1] - c.y * d[:, 0]) * plan.h
    return float(value)


def energy(c: Curve) -> float:
    """Elastic energy 1/2 * sum |D_h X|^2 h."""
    plan = c.plan
    d = derivative(plan, c.xy)
    return float(0.5 * np.sum(d * d) * plan.h)


def holder_seminorm(v: np.ndarray, gamma: float) -> float:
    """
    Discrete Hölder seminorm over node pairs with 0 < d(theta_k, theta_l) < 1

    Args:
        v: Scalar (n,) or vector-valued (n, 2) grid function
        gamma: Exponent in (0, 1)

    Returns:
        float: max |v_k - v_l| / d^gamma
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"Hölder exponent must lie in (0, 1), got {gamma}")
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    delta = v[:, None] - v[None, :]
    diff = np.abs(delta) if v.ndim == 1 else np.linalg.norm(delta, axis=-1)
    dist = _circle_distance(n)
    window = (dist > 0.0) & (dist < 1.0)
    if not np.any(window):
        return 0.0
    return float(np.max(diff[window] / dist[window] ** gamma))


def c1h_norm(v: np.ndarray, plan: Optional[SpectralPlan] = None) -> float:
    """Discrete C1 norm sup_k |V_k| + sup_k |(D_h V)_k|."""
    v = np.asarray(v, dtype=float)
    plan = plan or get_plan(v.shape[0])
    return float(np.max(_pointwise_norm(v)) + np.max(_pointwise_norm(derivative(plan, v))))


def deformation_ratio(c: Curve, gamma: float = 0.0) -> float:
    """
    Deformation ratio (sup|D_h X| + <D_h X>_gamma) / star_norm

    gamma = 0 gives the sup-only diagnostic rho_0 recorded in traces.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"Deformation-ratio exponent must lie in [0, 1), got {gamma}")
    s = star_norm(c)
    if s <= 0.0:
        raise DegenerateCurveError("Deformation ratio undefined: star norm is zero")
    d = derivative(c.plan, c.xy)
    numerator = np.max(_pointwise_norm(d))
    if gamma > 0.0:
        numerator += holder_seminorm(d, gamma)
    return float(numerator / s)


def dissipation(c: Curve, velocity: np.ndarray) -> float:
    """Viscous dissipation <D_h^2 X, dX/dt>_h, the rate of energy loss."""
    plan = c.plan
    force = second_derivative(plan, c.xy)
    return float(np.sum(force * velocity) * plan.h)


def apriori_bounds(c: Curve, energy0: float, area0: float, gamma: float = 0.5) -> dict:
    """
    Check the global a-priori bounds implied by energy decay and area conservation

    Returns:
        dict: star-norm upper bound, derivative-norm lower bound and whether both hold
    """
    s = star_norm(c)
    d = derivative(c.plan, c.xy)
    deriv_norm = float(np.max(_pointwise_norm(d)) + holder_seminorm(d, gamma))
    star_upper = float(np.sqrt(max(energy0, 0.0) / np.pi))
    deriv_lower = float(np.sqrt(max(area0, 0.0) / np.pi))
    # slack for the discrete versions of continuous inequalities
    slack = 1e-6 * max(star_upper, deriv_lower, 1.0)
    return {
        'star_norm': s,
        'star_norm_upper': star_upper,
        'deriv_norm': deriv_norm,
        'deriv_norm_lower': deriv_lower,
        'holds': bool(s <= star_upper + slack and deriv_norm + slack >= deriv_lower),
    }


def validate(c: Curve, threshold: float = 0.0) -> float:
    """
    Accept a curve for integration

    Returns:
        float: its star norm

    Raises:
        DegenerateCurveError: star norm at or below ``threshold``
    """
    s = star_norm(c)
    if s <= threshold:
        raise DegenerateCurveError(f"Curve is degenerate: star norm {s:.3e} <= {threshold:.1e}")
    if area(c) < 0.0:
        logger.warning("Curve has negative area; expected counter-clockwise orientation")
    return s


def to_frame(c: Curve) -> pd.DataFrame:
    return pd.DataFrame({'theta': c.plan.theta, 'x': c.x, 'y': c.y})


def from_frame(frame: pd.DataFrame) -> Curve:
    missing = [col for col in ('theta', 'x', 'y') if col not in frame.columns]
    if missing:
        raise ValueError(f"Curve table is missing columns: {missing}")
    c = Curve.from_xy(frame['x'].to_numpy(), frame['y'].to_numpy())
    if not np.allclose(frame['theta'].to_numpy(), c.plan.theta, rtol=0.0, atol=1e-12):
        raise ValueError("Curve table theta column is not the uniform grid")
    return c


def to_csv_text(c: Curve) -> str:
    buffer = io.StringIO()
    to_frame(c).to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_csv(c: Curve, path) -> None:
    with open(path, 'w', newline='') as handle:
        handle.write(to_csv_text(c))
    logger.debug(f"Wrote curve with n={c.n} to {path}")


def read_csv(path) -> Curve:
    return from_frame(pd.read_csv(path, float_precision='round_trip'))


def digest(c: Curve) -> str:
    """SHA-256 of the full-precision CSV form."""
    return hashlib.sha256(to_csv_text(c).encode()).hexdigest()
