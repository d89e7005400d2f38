"""Local jet computation, contrast normalization and jet transform laws.

The jet of an image at scale sigma is the stack of its six DtG responses up
to second order. Channel ``(m, n)`` holds ``(-1)**(m+n) <G^(m,n) | I>``, the
inner product of the kernel centred on each pixel with the image. With that
sign the channels are the derivatives of the blurred image (a ramp ``I = x``
gives a positive ``(1, 0)`` response), which is what the rotation and
reflection laws below act on.

Coordinates: x runs across columns, y runs down rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .kernels import DTG_FAMILY, default_support_radius, dtg_taps_1d

__all__ = [
    "CHANNELS",
    "WEBER_CONSTANT",
    "JetVector",
    "compute_jet",
    "contrast_normalize",
    "reflect_jet",
    "rotate_jet",
]

CHANNELS = DTG_FAMILY
WEBER_CONSTANT = 0.03


@dataclass(frozen=True)
class JetVector:
    """Six-channel jet image.

    ``channels`` has shape ``(6, height, width)`` in :data:`CHANNELS` order.
    """

    channels: np.ndarray
    sigma: float
    normalized: bool

    def __post_init__(self):
        if self.channels.ndim != 3 or self.channels.shape[0] != len(CHANNELS):
            raise ValueError(f"expected a (6, H, W) channel stack, got {self.channels.shape}")
        self.channels.setflags(write=False)

    def __getitem__(self, mn: tuple[int, int]) -> np.ndarray:
        return self.channels[CHANNELS.index(tuple(mn))]

    def __len__(self) -> int:
        return len(CHANNELS)

    @property
    def shape(self) -> tuple[int, int]:
        return self.channels.shape[1:]

    def at(self, row: int, col: int) -> np.ndarray:
        return np.array(self.channels[:, row, col])


def _check_image(image, support_radius: int) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {image.shape}")
    need = 2 * support_radius + 3
    if min(image.shape) < need:
        raise ValueError(f"image {image.shape[1]}x{image.shape[0]} is too small for "
                         f"support radius {support_radius}; both sides must be >= {need}")
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite intensities")
    return image


def compute_jet(image, sigma: float = 1.0, support_radius: int | None = None,
                scale_normalize: bool = True) -> JetVector:
    """Jet of ``image`` by separable filtering with replicate borders.

    Each channel costs one horizontal and one vertical 1-D pass; the three
    horizontal passes are shared between channels of equal x-order.
    """
    if support_radius is None:
        support_radius = default_support_radius(sigma)
    image = _check_image(image, support_radius)

    taps = [dtg_taps_1d(k, sigma, support_radius) for k in range(3)]
    along_x = [correlate1d(image, taps[k], axis=1, mode="nearest") for k in range(3)]
    out = np.empty((len(CHANNELS),) + image.shape)
    for c, (m, n) in enumerate(CHANNELS):
        correlate1d(along_x[m], taps[n], axis=0, mode="nearest", output=out[c])
        factor = (-1.0) ** (m + n)
        if scale_normalize:
            factor *= sigma ** (m + n)
        if factor != 1.0:
            out[c] *= factor
    return JetVector(out, float(sigma), scale_normalize)


def contrast_normalize(jet: JetVector, weber: float = WEBER_CONSTANT) -> JetVector:
    """Rescale every pixel's jet by ``log(1 + L/weber) / L``, L its l2 norm.

    Pixels with L == 0 stay zero.
    """
    ch = jet.channels
    norm = np.sqrt(np.einsum("cij,cij->ij", ch, ch))
    mult = np.zeros_like(norm)
    nz = norm > 0
    mult[nz] = np.log1p(norm[nz] / weber) / norm[nz]
    return JetVector(ch * mult, jet.sigma, jet.normalized)


def rotate_jet(jet6, theta: float) -> np.ndarray:
    """Transform a jet (leading axis of length 6) for a rotation by ``theta``.

    The gradient maps to ``R g`` and the Hessian to ``R H R^T`` with
    ``R = [[cos, -sin], [sin, cos]]`` in (x, y) coordinates. With y pointing
    down, ``np.rot90(image, k=-1)`` is a rotation by ``+pi/2``.
    """
    j = np.asarray(jet6, dtype=np.float64)
    c, s = math.cos(theta), math.sin(theta)
    b, c2 = math.cos(2 * theta), math.sin(2 * theta)
    a, jx, jy, jxx, jxy, jyy = j
    out = np.empty_like(j)
    out[0] = a
    out[1] = c * jx - s * jy
    out[2] = s * jx + c * jy
    half_trace = 0.5 * (jxx + jyy)
    half_diff = 0.5 * (jxx - jyy)
    out[3] = half_trace + b * half_diff - c2 * jxy
    out[4] = c2 * half_diff + b * jxy
    out[5] = half_trace - b * half_diff + c2 * jxy
    return out


def reflect_jet(jet6) -> np.ndarray:
    """Jet of the image mirrored about the line y = x (a transpose)."""
    j = np.asarray(jet6, dtype=np.float64)
    return j[[0, 2, 1, 5, 4, 3]]
