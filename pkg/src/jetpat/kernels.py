"""Hermite polynomials and separable derivative-of-Gaussian (DtG) kernels.

A DtG of order ``m`` at scale ``sigma`` is sampled at integer positions and
rescaled so that its absolute taps sum to one. Two-dimensional kernels are
the outer product of an x-factor and a y-factor, and are never convolved
densely by the pipeline; the dense form exists for inspection and testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DTG_FAMILY",
    "MAX_ORDER",
    "DtgKernel",
    "default_support_radius",
    "dtg_kernel_2d",
    "dtg_taps_1d",
    "gaussian_derivative",
    "hermite_eval",
    "kernel_family",
]

MAX_ORDER = 2

# (m, n) = (x-order, y-order), in jet channel order.
DTG_FAMILY: tuple[tuple[int, int], ...] = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def hermite_eval(m: int, x):
    """Physicists' Hermite polynomial H_m evaluated at ``x``.

    Uses the recurrence H_{k+1} = 2x H_k - 2k H_{k-1}. ``x`` may be a scalar
    or an array; the result has the same shape.
    """
    if m < 0:
        raise ValueError(f"Hermite order must be non-negative, got {m}")
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.ones_like(x)
    if m == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for k in range(1, m):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def gaussian_derivative(m: int, x, sigma: float):
    """m-th derivative of the unit-mass 1-D Gaussian at scale ``sigma``."""
    x = np.asarray(x, dtype=np.float64)
    s2 = sigma * math.sqrt(2.0)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))
    return (-1.0 / s2) ** m * hermite_eval(m, x / s2) * g


def default_support_radius(sigma: float) -> int:
    return max(1, math.ceil(4.0 * sigma))


def dtg_taps_1d(m: int, sigma: float, support_radius: int | None = None,
                normalize: bool = True) -> np.ndarray:
    """Sampled 1-D DtG taps at x = -r..r, L1-normalized by default.

    Parameters
    ----------
    m : int
        Derivative order, 0..2.
    sigma : float
        Gaussian scale in pixels.
    support_radius : int, optional
        Half-width ``r`` of the sampled grid; ``ceil(4 sigma)`` when omitted.
    normalize : bool
        Make the taps usable as a filter: for even orders >= 2 remove the DC
        left by truncation (subtracting the matching multiple of the sampled
        Gaussian, so constants have exactly zero response), then rescale so
        that ``sum(abs(taps)) == 1``. Without it the taps are the raw point
        values of the continuous derivative.
    """
    if not 0 <= m <= MAX_ORDER:
        raise ValueError(f"derivative order must be in 0..{MAX_ORDER}, got {m}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if support_radius is None:
        support_radius = default_support_radius(sigma)
    if support_radius < 1:
        raise ValueError(f"support_radius must be >= 1, got {support_radius}")
    x = np.arange(-support_radius, support_radius + 1, dtype=np.float64)
    taps = gaussian_derivative(m, x, sigma)
    if normalize:
        if m >= 2 and m % 2 == 0:
            g = gaussian_derivative(0, x, sigma)
            taps = taps - (taps.sum() / g.sum()) * g
        taps = taps / np.abs(taps).sum()
    return taps


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DtgKernel:
    """Separable 2-D DtG kernel of x-order ``m`` and y-order ``n``.

    ``dense`` is indexed ``[y, x]`` (rows are y) to match image arrays.
    """

    m: int
    n: int
    sigma: float
    support_radius: int
    taps_x: np.ndarray = field(repr=False)
    taps_y: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return self.m + self.n

    @property
    def dense(self) -> np.ndarray:
        return np.outer(self.taps_y, self.taps_x)


def dtg_kernel_2d(m: int, n: int, sigma: float = 1.0,
                  support_radius: int | None = None) -> DtgKernel:
    if m < 0 or n < 0 or m + n > MAX_ORDER:
        raise ValueError(f"kernel orders must satisfy m, n >= 0 and m + n <= {MAX_ORDER}, "
                         f"got ({m}, {n})")
    if support_radius is None:
        support_radius = default_support_radius(sigma)
    return DtgKernel(
        m=m,
        n=n,
        sigma=float(sigma),
        support_radius=int(support_radius),
        taps_x=_frozen(dtg_taps_1d(m, sigma, support_radius)),
        taps_y=_frozen(dtg_taps_1d(n, sigma, support_radius)),
    )


def kernel_family(sigma: float = 1.0, support_radius: int | None = None) -> list[DtgKernel]:
    """The six kernels up to second order, in jet channel order."""
    return [dtg_kernel_2d(m, n, sigma, support_radius) for m, n in DTG_FAMILY]
