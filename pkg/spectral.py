"""
Spectral operators on the uniform periodic grid
Fourier-multiplier derivative, Hilbert transform, leading-order operator and
its Poisson-kernel semigroup for grid functions sampled at theta_k = k*h
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralPlan:
    """Size-n transform plan with precomputed multiplier tables.

    Multipliers are stored for the non-negative wavenumbers k = 0 .. n/2 of
    the real transform; the last entry is the Nyquist mode and is zero in
    every table.
    """
    n: int
    h: float = field(init=False, compare=False)
    theta: np.ndarray = field(init=False, repr=False, compare=False)
    wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)
    deriv_mult: np.ndarray = field(init=False, repr=False, compare=False)
    hilbert_mult: np.ndarray = field(init=False, repr=False, compare=False)
    lambda_mult: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n % 2:
            raise ValueError(f"Grid size must be an even integer >= 8, got {self.n!r}")

        k = np.arange(self.n // 2 + 1, dtype=float)
        nyquist = np.zeros_like(k, dtype=bool)
        nyquist[-1] = True

        deriv = 1j * k
        deriv[nyquist] = 0.0
        hilbert = -1j * np.sign(k)
        hilbert[nyquist] = 0.0
        lam = -np.abs(k) / 4.0
        lam[nyquist] = 0.0

        for table in (k, deriv, hilbert, lam):
            table.setflags(write=False)
        theta = 2.0 * np.pi * np.arange(self.n) / self.n
        theta.setflags(write=False)

        object.__setattr__(self, "h", 2.0 * np.pi / self.n)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "deriv_mult", deriv)
        object.__setattr__(self, "hilbert_mult", hilbert)
        object.__setattr__(self, "lambda_mult", lam)

    @property
    def nyquist_index(self) -> int:
        return self.n // 2

    def semigroup_mult(self, t: float) -> np.ndarray:
        """Multiplier exp(-t|k|/4) with the Nyquist entry zeroed."""
        if t < 0:
            raise ValueError(f"Semigroup time must be non-negative, got {t}")
        mult = np.exp(-t * self.wavenumbers / 4.0)
        mult[-1] = 0.0
        return mult

    def forward(self, v: np.ndarray, axis: int = 0) -> np.ndarray:
        """Unnormalized forward transform along ``axis`` (non-negative modes)."""
        self._check_size(v, axis)
        return np.fft.rfft(v, axis=axis)

    def inverse(self, v_hat: np.ndarray, axis: int = 0) -> np.ndarray:
        """Inverse of :meth:`forward`, carrying the 1/n normalization."""
        return np.fft.irfft(v_hat, n=self.n, axis=axis)

    def apply(self, mult: np.ndarray, v: np.ndarray, axis: int = 0) -> np.ndarray:
        """Multiply every mode of ``v`` along ``axis`` by ``mult``."""
        v = np.asarray(v, dtype=float)
        v_hat = self.forward(v, axis=axis)
        shape = [1] * v_hat.ndim
        shape[axis] = -1
        return self.inverse(v_hat * mult.reshape(shape), axis=axis)

    def _check_size(self, v: np.ndarray, axis: int):
        if v.ndim == 0 or v.shape[axis] != self.n:
            raise ValueError(
                f"Grid function has {v.shape[axis] if v.ndim else 0} samples along axis {axis}, "
                f"plan expects {self.n}")


@lru_cache(maxsize=None)
def get_plan(n: int) -> SpectralPlan:
    """Shared plan for grid size ``n``; plans are immutable."""
    logger.debug(f"Building spectral plan for n={n}")
    return SpectralPlan(int(n))


def derivative(plan: SpectralPlan, v: np.ndarray, axis: int = 0) -> np.ndarray:
    """
    Spectral derivative D_h with the Nyquist mode zeroed

    Args:
        plan: Spectral plan of matching size
        v: Real grid function, scalar (n,) or vector-valued (n, 2)
        axis: Grid axis of ``v``

    Returns:
        np.ndarray: Real grid function of the same shape
    """
    return plan.apply(plan.deriv_mult, v, axis=axis)


def second_derivative(plan: SpectralPlan, v: np.ndarray, axis: int = 0) -> np.ndarray:
    """D_h applied twice."""
    return plan.apply(plan.deriv_mult ** 2, v, axis=axis)


def hilbert(plan: SpectralPlan, v: np.ndarray, axis: int = 0) -> np.ndarray:
    """Hilbert transform, symbol -i*sgn(k), Nyquist zeroed."""
    return plan.apply(plan.hilbert_mult, v, axis=axis)


def lambda_op(plan: SpectralPlan, v: np.ndarray, axis: int = 0) -> np.ndarray:
    """Leading-order operator -1/4 H D_h, i.e. symbol -|k|/4."""
    return plan.apply(plan.lambda_mult, v, axis=axis)


def semigroup(plan: SpectralPlan, t: float, v: np.ndarray, axis: int = 0) -> np.ndarray:
    """
    Poisson-kernel semigroup S_h(t) = exp(t*Lambda)

    Args:
        plan: Spectral plan of matching size
        t: Non-negative duration
        v: Real grid function

    Returns:
        np.ndarray: S_h(t) v; at t = 0 this only removes the Nyquist mode
    """
    return plan.apply(plan.semigroup_mult(t), v, axis=axis)
