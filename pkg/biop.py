"""
Boundary-integral operators for the immersed filament
Combined remainder kernel and its quadrature, the full right-hand side, its
finite-difference linearization and off-curve Stokeslet field reconstruction
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from curve import Curve, DegenerateCurveError, c1h_norm
from spectral import SpectralPlan, derivative, lambda_op, second_derivative

logger = logging.getLogger(__name__)

MASK_GRID_LENGTHS = 5.0
EPS_SWEEP = (1e-4, 1e-5, 1e-6)


@dataclass(frozen=True, eq=False)
class BlockKernel:
    """N x N array of 2 x 2 blocks H_kl, stored with shape (n, n, 2, 2)"""
    blocks: np.ndarray

    @property
    def n(self) -> int:
        return self.blocks.shape[0]


@dataclass
class FieldSample:
    """Velocity and pressure at a point off the filament"""
    point: np.ndarray
    u: Optional[np.ndarray]
    p: Optional[float]
    near_curve: bool


def _index_distance(n: int) -> np.ndarray:
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(gap, n - gap)


def kernel_matrix(c: Curve, plan: Optional[SpectralPlan] = None) -> BlockKernel:
    """
    Assemble the combined remainder kernel

    H_kl = -log(|X_k - X_l| / (2|sin((theta_k - theta_l)/2)|)) I + dX (x) dX / |dX|^2, l != k
    H_kk = -log|(D_h X)_k| I + T_k (x) T_k / |T_k|^2,  T = D_h X

    Raises:
        DegenerateCurveError: coincident nodes or a vanishing tangent, naming the index pair
    """
    plan = plan or c.plan
    n = c.n
    delta = c.xy[:, None, :] - c.xy[None, :, :]
    r2 = np.einsum('kli,kli->kl', delta, delta)
    off_diagonal = ~np.eye(n, dtype=bool)
    if np.any(r2[off_diagonal] == 0.0):
        k, l = np.argwhere((r2 == 0.0) & off_diagonal)[0]
        raise DegenerateCurveError(f"Nodes {k} and {l} coincide", index_pair=(int(k), int(l)))

    tangent = derivative(plan, c.xy)
    t2 = np.einsum('ki,ki->k', tangent, tangent)
    if np.any(t2 == 0.0):
        k = int(np.argmax(t2 == 0.0))
        raise DegenerateCurveError(f"Tangent vanishes at node {k}", index_pair=(k, k))

    # symmetric in (k, l) by construction: built from |k - l| and products of delta
    chord_circle = 2.0 * np.abs(np.sin(np.pi * _index_distance(n) / n))
    np.fill_diagonal(r2, 1.0)
    np.fill_diagonal(chord_circle, 1.0)
    log_term = -0.5 * np.log(r2 / chord_circle ** 2)
    projector = delta[:, :, :, None] * delta[:, :, None, :] / r2[:, :, None, None]

    diag = np.arange(n)
    log_term[diag, diag] = -0.5 * np.log(t2)
    projector[diag, diag] = tangent[:, :, None] * tangent[:, None, :] / t2[:, None, None]

    blocks = projector + log_term[:, :, None, None] * np.eye(2)
    if not np.all(np.isfinite(blocks)):
        raise DegenerateCurveError("Kernel assembly produced non-finite entries")
    blocks.setflags(write=False)
    return BlockKernel(blocks)


def remainder(c: Curve, plan: Optional[SpectralPlan] = None) -> np.ndarray:
    """
    Quadrature of the smoothing remainder

    R_{h,k} = -(1/4pi) sum_l (D_{h,l} H_{kl}) (D_h X)_l h, where each kernel row
    is differentiated spectrally along its column index.

    Returns:
        np.ndarray: Vector grid function of shape (n, 2)
    """
    plan = plan or c.plan
    kernel = kernel_matrix(c, plan)
    d_kernel = derivative(plan, kernel.blocks, axis=1)
    tangent = derivative(plan, c.xy)
    return -(plan.h / (4.0 * np.pi)) * np.einsum('klij,lj->ki', d_kernel, tangent)


def rhs(c: Curve, plan: Optional[SpectralPlan] = None) -> np.ndarray:
    """Full evolution right-hand side Lambda X + R(X)."""
    plan = plan or c.plan
    return lambda_op(plan, c.xy) + remainder(c, plan)


def linearize_rhs(base: Curve, direction: np.ndarray, eps: Optional[float] = None,
                  plan: Optional[SpectralPlan] = None) -> np.ndarray:
    """
    Central finite-difference directional derivative of :func:`rhs`

    Args:
        base: Curve to linearize about
        direction: Perturbation direction, shape (n, 2)
        eps: Step; defaults to 1e-5 * ||base||_{C1_h}

    Returns:
        np.ndarray: (rhs(base + eps*dir) - rhs(base - eps*dir)) / (2 eps)
    """
    plan = plan or base.plan
    direction = np.asarray(direction, dtype=float)
    if direction.shape != base.xy.shape:
        raise ValueError(f"Direction shape {direction.shape} does not match curve {base.xy.shape}")
    if eps is None:
        eps = 1e-5 * c1h_norm(base.xy, plan)
    if eps <= 0:
        raise ValueError(f"Finite-difference step must be positive, got {eps}")
    plus = rhs(Curve(base.xy + eps * direction), plan)
    minus = rhs(Curve(base.xy - eps * direction), plan)
    return (plus - minus) / (2.0 * eps)


def linearize_eps_sweep(base: Curve, direction: np.ndarray,
                        eps_values: Sequence[float] = EPS_SWEEP) -> Dict[float, np.ndarray]:
    """Finite-difference linearization at several relative steps, to confirm the plateau."""
    scale = c1h_norm(base.xy, base.plan)
    return {eps: linearize_rhs(base, direction, eps=eps * scale) for eps in eps_values}


def stokeslet(x) -> np.ndarray:
    """
    2D Stokeslet G(x) = (1/4pi)(-log|x| I + x (x) x / |x|^2)

    Raises:
        ValueError: at the singularity x = 0
    """
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    if r2 == 0.0:
        raise ValueError("Stokeslet is singular at the origin")
    return (-0.5 * np.log(r2) * np.eye(2) + np.outer(x, x) / r2) / (4.0 * np.pi)


def mask_radius(c: Curve, plan: Optional[SpectralPlan] = None) -> float:
    """Distance from the nodes inside which off-curve quadrature is not trusted."""
    plan = plan or c.plan
    speed = np.linalg.norm(derivative(plan, c.xy), axis=1)
    return MASK_GRID_LENGTHS * plan.h * float(np.max(speed))


def _evaluate_fields(c: Curve, plan: SpectralPlan, points: np.ndarray):
    """Velocity and pressure at each row of ``points`` (m, 2), plus the near-curve mask."""
    tangent = derivative(plan, c.xy)
    force = second_derivative(plan, c.xy)
    r = points[:, None, :] - c.xy[None, :, :]
    r2 = np.einsum('mli,mli->ml', r, r)
    near = np.sqrt(np.min(r2, axis=1)) <= mask_radius(c, plan)
    r2 = np.where(r2 == 0.0, np.inf, r2)

    # u(x) = -sum_l d/dtheta' G(x - X_l) T_l h with d(x - X')/dtheta' = -T'
    r_dot_t = np.einsum('mli,li->ml', r, tangent)
    t2 = np.einsum('li,li->l', tangent, tangent)
    # 4pi (dG/dtheta') T = (2 (r.T)^2 / |r|^4 - |T|^2 / |r|^2) r; the (r.T) T terms cancel
    dg_t = (2.0 * r_dot_t ** 2 / r2 ** 2 - t2[None, :] / r2)[:, :, None] * r
    u = -np.sum(dg_t, axis=1) * plan.h / (4.0 * np.pi)

    p = np.einsum('mli,li->m', r / r2[:, :, None], force) * plan.h / (2.0 * np.pi)
    return u, p, near


def field_at(c: Curve, plan: Optional[SpectralPlan], x) -> FieldSample:
    """
    Velocity and pressure at an off-curve point by trapezoid quadrature

    Points within the mask radius of any node come back flagged near_curve with
    no values.
    """
    plan = plan or c.plan
    point = np.asarray(x, dtype=float)
    u, p, near = _evaluate_fields(c, plan, point[None, :])
    if near[0]:
        return FieldSample(point=point, u=None, p=None, near_curve=True)
    return FieldSample(point=point, u=u[0], p=float(p[0]), near_curve=False)


def field_grid(c: Curve, plan: Optional[SpectralPlan], xs: np.ndarray, ys: np.ndarray) -> pd.DataFrame:
    """
    Masked field lattice

    Returns:
        pd.DataFrame: columns x, y, u1, u2, p, masked; masked rows carry NaN values
    """
    plan = plan or c.plan
    gx, gy = np.meshgrid(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), indexing='xy')
    points = np.column_stack([gx.ravel(), gy.ravel()])
    u, p, near = _evaluate_fields(c, plan, points)
    u[near] = np.nan
    p[near] = np.nan
    frame = pd.DataFrame({
        'x': points[:, 0],
        'y': points[:, 1],
        'u1': u[:, 0],
        'u2': u[:, 1],
        'p': p,
        'masked': near.astype(int),
    })
    if near.all():
        logger.warning("Every field-grid point lies within the mask radius of the curve")
    return frame
