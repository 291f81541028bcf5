"""Sampled Gaussian and Gaussian-derivative kernels.

Kernels are truncated at radius ceil(4*sigma), which keeps more than
99.99% of the Gaussian mass. Order-0 taps are renormalized to sum to
one; derivative taps are mean-corrected so they annihilate constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InvalidParameterError

__all__ = ["Kernel1D", "gaussian_kernel"]


@dataclass(frozen=True, eq=False)
class Kernel1D:
    """A symmetric-support 1-D kernel: taps[i] weights offset i - radius."""

    radius: int
    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if self.radius < 0 or taps.shape != (2 * self.radius + 1,):
            raise InvalidParameterError(
                f"Kernel1D needs 2*radius+1 taps, got radius {self.radius} "
                f"and shape {taps.shape}"
            )
        if not np.all(np.isfinite(taps)):
            raise InvalidParameterError("Kernel1D taps must be finite")
        object.__setattr__(self, "taps", taps)

    def __len__(self) -> int:
        return self.taps.size


@lru_cache(maxsize=64)
def _gaussian_taps(sigma: float, order: int) -> tuple[int, tuple[float, ...]]:
    radius = math.ceil(4.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))
    if order == 0:
        taps = g / g.sum()
    elif order == 1:
        taps = -x / sigma**2 * g
        taps = taps - taps.mean()
    else:
        taps = (x * x - sigma**2) / sigma**4 * g
        taps = taps - taps.mean()
    return radius, tuple(taps.tolist())


def gaussian_kernel(sigma: float, order: int = 0) -> Kernel1D:
    """Sample the analytic Gaussian derivative of the given order.

    order 0 blurs, 1 differentiates once, 2 twice. Convolving an image
    with an order-2 kernel approximates the second derivative of the
    Gaussian-smoothed image.
    """
    if not isinstance(order, (int, np.integer)) or order not in (0, 1, 2):
        raise InvalidParameterError(f"order must be 0, 1 or 2, got {order!r}")
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise InvalidParameterError(f"sigma must be finite and > 0, got {sigma!r}")
    radius, taps = _gaussian_taps(sigma, int(order))
    return Kernel1D(radius, np.array(taps))
