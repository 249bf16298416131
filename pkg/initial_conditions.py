"""
Initial-condition library
Closed-form filament configurations sampled on the uniform grid
"""

import logging
from typing import Any, Callable, Dict, Optional

import numpy as np

from curve import Curve, DegenerateCurveError, star_norm
from spectral import get_plan

logger = logging.getLogger(__name__)


def _demo(theta: np.ndarray, params: Dict[str, Any]) -> np.ndarray:
    radius = 1.0 + np.cos(7 * theta) / 4.0
    return np.column_stack([
        radius * np.cos(theta) + np.cos(2 * theta) / 8.0,
        radius * np.sin(theta) + np.sin(2 * theta) / 8.0,
    ])


def _unlabeled(theta: np.ndarray, params: Dict[str, Any]) -> np.ndarray:
    return np.column_stack([
        np.cos(theta) + np.cos(2 * theta) / 5.0 - np.sin(2 * theta) / 10.0,
        np.sin(theta) + np.sin(2 * theta) / 5.0 + np.cos(2 * theta) / 10.0,
    ])


def _labeled(theta: np.ndarray, params: Dict[str, Any]) -> np.ndarray:
    m = params.get('m', 3)
    if int(m) != m:
        raise ValueError(f"Labeled curve needs an integer m, got {m!r}")
    m = int(m)
    if m not in (3, 4, 5):
        logger.info(f"Labeled curve with m={m} (outside the standard set 3, 4, 5)")
    return np.column_stack([
        (1.0 + np.exp(np.cos(3 * theta)) / 4.0) * np.cos(theta),
        (1.0 + np.exp(np.sin(m * theta)) / 4.0) * np.sin(theta),
    ])


def _circle(theta: np.ndarray, params: Dict[str, Any]) -> np.ndarray:
    a = float(params.get('A', 1.0))
    b = float(params.get('B', 0.0))
    c1 = float(params.get('C1', 0.0))
    c2 = float(params.get('C2', 0.0))
    if a * a + b * b <= 0.0:
        raise DegenerateCurveError(f"Circle needs A^2 + B^2 > 0, got A={a}, B={b}")
    cos, sin = np.cos(theta), np.sin(theta)
    return np.column_stack([a * cos - b * sin + c1, a * sin + b * cos + c2])


def _series(theta: np.ndarray, cos_coeffs, sin_coeffs) -> np.ndarray:
    out = np.zeros_like(theta)
    for k, value in enumerate(cos_coeffs or []):
        out += float(value) * np.cos(k * theta)
    for k, value in enumerate(sin_coeffs or []):
        out += float(value) * np.sin(k * theta)
    return out


def _fourier(theta: np.ndarray, params: Dict[str, Any]) -> np.ndarray:
    """X = sum_k a_k cos(k theta) + b_k sin(k theta), coefficient lists indexed from k = 0."""
    keys = ('x_cos', 'x_sin', 'y_cos', 'y_sin')
    if not any(params.get(key) for key in keys):
        raise ValueError(f"Fourier curve needs at least one of {keys}")
    return np.column_stack([
        _series(theta, params.get('x_cos'), params.get('x_sin')),
        _series(theta, params.get('y_cos'), params.get('y_sin')),
    ])


def _random_fourier(theta: np.ndarray, params: Dict[str, Any]) -> np.ndarray:
    """Unit circle plus a seeded random perturbation with coefficients decaying like 1/k^2."""
    if 'seed' not in params:
        raise ValueError("Random Fourier curve needs an explicit 'seed'")
    modes = int(params.get('modes', 6))
    amplitude = float(params.get('amplitude', 0.05))
    # Philox is counter-based, so the same seed reproduces across platforms
    rng = np.random.Generator(np.random.Philox(int(params['seed']) & (2 ** 64 - 1)))
    ks = np.arange(2, modes + 2)
    coeffs = rng.standard_normal((ks.size, 4)) * (amplitude / ks ** 2)[:, None]
    xy = np.column_stack([np.cos(theta), np.sin(theta)])
    for k, (ax, bx, ay, by) in zip(ks, coeffs):
        xy[:, 0] += ax * np.cos(k * theta) + bx * np.sin(k * theta)
        xy[:, 1] += ay * np.cos(k * theta) + by * np.sin(k * theta)
    return xy


INITIAL_CONDITIONS: Dict[str, Callable[[np.ndarray, Dict[str, Any]], np.ndarray]] = {
    'demo': _demo,
    'unlabeled': _unlabeled,
    'labeled': _labeled,
    'circle': _circle,
    'fourier': _fourier,
    'random_fourier': _random_fourier,
}


def make_initial(name: str, params: Optional[Dict[str, Any]], n: int) -> Curve:
    """
    Sample a named initial configuration at theta_k

    Args:
        name: One of demo, unlabeled, labeled, circle, fourier, random_fourier
        params: Shape parameters (m for labeled, A/B/C1/C2 for circle, coefficient lists for fourier)
        n: Grid size

    Returns:
        Curve: Sampled configuration with positive star norm
    """
    if name not in INITIAL_CONDITIONS:
        raise ValueError(f"Unknown initial condition '{name}'. Choose from {sorted(INITIAL_CONDITIONS)}")
    theta = get_plan(n).theta
    c = Curve(INITIAL_CONDITIONS[name](theta, dict(params or {})))
    s = star_norm(c)
    if s <= 0.0:
        raise DegenerateCurveError(f"Initial condition '{name}' is degenerate at n={n}")
    logger.debug(f"Sampled initial condition '{name}' at n={n}, star norm {s:.6f}")
    return c
