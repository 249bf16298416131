"""
Circle-mode machinery
Zero-eigenspace basis of the linearization about a circle, the discrete inner
product and projections onto / away from it, decay series and slope fitting
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from spectral import SpectralPlan, get_plan, lambda_op

logger = logging.getLogger(__name__)

BASIS_ORDER = ('x', 'y', 'r', 't')
ROUNDOFF_LOG_FLOOR = np.log(1e-13)
MIN_FIT_POINTS = 10


class WindowError(ValueError):
    """Raised when a slope-fit window is too short or sits at the roundoff floor."""


@dataclass
class ModeCoeffs:
    """Coordinates of P_h X in the basis e_x, e_y, e_r, e_t"""
    a_x: float
    a_y: float
    a_r: float
    a_t: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a_x, self.a_y, self.a_r, self.a_t])

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "ModeCoeffs":
        a_x, a_y, a_r, a_t = (float(value) for value in a)
        return cls(a_x=a_x, a_y=a_y, a_r=a_r, a_t=a_t)

    def reconstruct(self, n: int) -> np.ndarray:
        e = basis(n)
        return self.a_x * e['x'] + self.a_y * e['y'] + self.a_r * e['r'] + self.a_t * e['t']


def basis(n: int) -> Dict[str, np.ndarray]:
    """Grid samples of e_x, e_y, e_r, e_t, each of shape (n, 2)."""
    theta = get_plan(n).theta
    cos, sin = np.cos(theta), np.sin(theta)
    ones, zeros = np.ones(n), np.zeros(n)
    return {
        'x': np.column_stack([ones, zeros]),
        'y': np.column_stack([zeros, ones]),
        'r': np.column_stack([cos, sin]),
        't': np.column_stack([-sin, cos]),
    }


def inner(u: np.ndarray, v: np.ndarray) -> float:
    """Discrete inner product <U, V>_h = sum_k U_k . V_k h."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"Inner product of mismatched grid functions {u.shape} and {v.shape}")
    return float(np.sum(u * v) * (2.0 * np.pi / u.shape[0]))


def coeffs(v: np.ndarray) -> ModeCoeffs:
    """The four values <V, e_l>_h / 2pi."""
    v = np.asarray(v, dtype=float)
    e = basis(v.shape[0])
    return ModeCoeffs.from_array([inner(v, e[name]) / (2.0 * np.pi) for name in BASIS_ORDER])


def project_P(v: np.ndarray) -> np.ndarray:
    """Projection onto the span of the circular equilibria."""
    v = np.asarray(v, dtype=float)
    return coeffs(v).reconstruct(v.shape[0])


def project_Pi(v: np.ndarray) -> np.ndarray:
    """Complementary projection I - P_h."""
    v = np.asarray(v, dtype=float)
    return v - project_P(v)


def project_translation(v: np.ndarray) -> np.ndarray:
    """Remove the translation part (the e_x, e_y components) of ``v``."""
    v = np.asarray(v, dtype=float)
    e = basis(v.shape[0])
    a = coeffs(v)
    return v - a.a_x * e['x'] - a.a_y * e['y']


def linearized_circle_operator(plan: SpectralPlan, v: np.ndarray) -> np.ndarray:
    """
    Closed form of the linearization about the unit circle

    L v = R_theta Lambda R_theta^{-1} v' with v' the translation-free part of v.
    """
    w = project_translation(v)
    cos, sin = np.cos(plan.theta), np.sin(plan.theta)
    # rotate into the local (radial, tangential) frame
    local = np.column_stack([cos * w[:, 0] + sin * w[:, 1], -sin * w[:, 0] + cos * w[:, 1]])
    local = lambda_op(plan, local)
    return np.column_stack([cos * local[:, 0] - sin * local[:, 1], sin * local[:, 0] + cos * local[:, 1]])


def eigenmodes(n: int, k: int) -> List[Tuple[str, np.ndarray]]:
    """
    Eigenvectors of the circle linearization for lambda_k = -k/4

    Returns:
        list: (label, grid function) pairs; four for k = 0 and k >= 2, two for k = 1
    """
    if k < 0:
        raise ValueError(f"Mode index must be non-negative, got {k}")
    e = basis(n)
    theta = get_plan(n).theta
    if k == 0:
        return [(f"e_{name}", e[name]) for name in BASIS_ORDER]
    if k == 1:
        cos2, sin2 = np.cos(2 * theta), np.sin(2 * theta)
        return [
            ("(cos2t,sin2t)", np.column_stack([cos2, sin2])),
            ("(-sin2t,cos2t)", np.column_stack([-sin2, cos2])),
        ]
    ck, sk = np.cos(k * theta)[:, None], np.sin(k * theta)[:, None]
    return [
        (f"cos({k}t)e_r", ck * e['r']),
        (f"sin({k}t)e_r", sk * e['r']),
        (f"cos({k}t)e_t", ck * e['t']),
        (f"sin({k}t)e_t", sk * e['t']),
    ]


def decay_metrics(trace, uniform_rtol: float = 1e-9) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Decay series of a simulation trace

    Args:
        trace: Sequence of TraceRecord at a uniform time stride

    Returns:
        tuple: (t, log ||Pi_h X||_{C1_h}) and (t_half, log |D_t a|) tables
    """
    if len(trace) < 2:
        raise ValueError("Decay metrics need at least two trace records")
    t = np.array([record.t for record in trace])
    stride = np.diff(t)
    if np.any(stride <= 0) or np.max(np.abs(stride - stride[0])) > uniform_rtol * max(abs(stride[0]), 1.0):
        raise ValueError("Decay metrics need trace records at a uniform time stride")

    a = np.array([record.coeffs.as_array() for record in trace])
    pi_norm = np.array([record.c1h_pi_norm for record in trace])
    dta = np.linalg.norm(np.diff(a, axis=0), axis=1) / stride

    with np.errstate(divide='ignore'):
        pi_series = pd.DataFrame({'t': t, 'log_pi_c1h': np.log(pi_norm)})
        dta_series = pd.DataFrame({'t_half': t[:-1] + 0.5 * stride, 'log_dta': np.log(dta)})
    return pi_series, dta_series


@dataclass
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int
    t_min: float
    t_max: float

    def as_dict(self) -> dict:
        return {
            'slope': self.slope,
            'stderr': self.stderr,
            'intercept': self.intercept,
            'n_points': self.n_points,
            'window': [self.t_min, self.t_max],
        }


def fit_slope(t: np.ndarray, values: np.ndarray, t_min: float, t_max: float) -> SlopeFit:
    """
    Least-squares slope of a log-valued series over [t_min, t_max]

    Raises:
        WindowError: fewer than ten points, non-finite values, or values at the roundoff floor
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    inside = (t >= t_min) & (t <= t_max)
    if np.count_nonzero(inside) < MIN_FIT_POINTS:
        raise WindowError(
            f"Fit window [{t_min}, {t_max}] holds {np.count_nonzero(inside)} points, need {MIN_FIT_POINTS}")
    tw, vw = t[inside], values[inside]
    if not np.all(np.isfinite(vw)):
        raise WindowError(f"Fit window [{t_min}, {t_max}] contains non-finite values")
    if np.any(vw < ROUNDOFF_LOG_FLOOR):
        raise WindowError(f"Fit window [{t_min}, {t_max}] reaches the roundoff floor")

    if np.ptp(vw) == 0.0:
        return SlopeFit(0.0, 0.0, float(vw[0]), int(tw.size), t_min, t_max)
    result = stats.linregress(tw, vw)
    return SlopeFit(float(result.slope), float(result.stderr), float(result.intercept),
                    int(tw.size), t_min, t_max)


def default_windows(t_final: float, dta_t_max: float) -> Dict[str, Tuple[float, float]]:
    """Fit windows [T/2, T] for the Pi series and [0.4T', T'] for the D_t a series."""
    return {
        'pi': (0.5 * t_final, t_final),
        'dta': (0.4 * dta_t_max, dta_t_max),
    }
