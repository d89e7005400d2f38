"""Local jet pattern codes, uniform-pattern mapping and histogram features.

Each jet channel is encoded like an LBP image: ``N`` neighbors on a circle of
radius ``R`` are compared with the centre, and neighbor ``n`` (1-based)
contributes bit ``n-1`` when it is greater than or equal to the centre.
Neighbor 1 sits to the right of the centre and the sequence runs counter-
clockwise on screen (y points down, hence ``dy = -R sin(theta)``).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from functools import cached_property, lru_cache

import numpy as np

from .jetspace import CHANNELS, WEBER_CONSTANT, compute_jet, contrast_normalize

__all__ = [
    "FeatureConfig",
    "SamplingGeometry",
    "code_map",
    "extract_feature",
    "feature_length",
    "histogram",
    "lbp_feature",
    "ljp_code",
    "ljp_code_maps",
    "n_uniform_bins",
    "sample_neighbor",
    "uniform_map",
    "uniform_table",
]

_SNAP = 1e-9


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) < _SNAP else v


def _round_offset(v: float) -> int:
    """Nearest integer offset, halves away from zero.

    The offset is rounded on its own (not the absolute position), so every
    centre picks the same neighbor pixel; built-in ``round`` would send
    ``x.5`` to the even integer and vary with the centre's parity.
    """
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


@dataclass(frozen=True)
class SamplingGeometry:
    radius: float = 1.0
    neighbors: int = 8

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.neighbors < 1:
            raise ValueError(f"neighbors must be >= 1, got {self.neighbors}")
        if self.neighbors > 31:
            raise ValueError("at most 31 neighbors are supported")

    @cached_property
    def offsets(self) -> tuple[tuple[float, float], ...]:
        """(dx, dy) per neighbor, dx across columns and dy down rows."""
        out = []
        for k in range(self.neighbors):
            theta = k * 2.0 * math.pi / self.neighbors
            out.append((_snap(self.radius * math.cos(theta)),
                        _snap(-self.radius * math.sin(theta))))
        return tuple(out)

    @property
    def border(self) -> int:
        # ceil, not floor: a bilinear sample at non-integer R touches pixel ceil(R)
        return math.ceil(self.radius - _SNAP)

    def valid_shape(self, shape: tuple[int, int]) -> tuple[int, int]:
        b = self.border
        return shape[0] - 2 * b, shape[1] - 2 * b


def sample_neighbor(channel, center: tuple[int, int], offset: tuple[float, float],
                    interpolation: str = "bilinear") -> float:
    """Value of ``channel`` at ``center + offset``.

    ``center`` is ``(row, col)``; ``offset`` is ``(dx, dy)``. Bilinear
    interpolation reduces to the exact pixel value for integer offsets.
    """
    channel = np.asarray(channel, dtype=np.float64)
    row, col = center
    dx, dy = _snap(float(offset[0])), _snap(float(offset[1]))
    if interpolation == "nearest":
        dx, dy = _round_offset(dx), _round_offset(dy)
    elif interpolation != "bilinear":
        raise ValueError(f"unknown interpolation {interpolation!r}")
    x, y = col + dx, row + dy
    h, w = channel.shape
    x0, y0 = math.floor(x), math.floor(y)
    tx, ty = x - x0, y - y0
    x1 = x0 + 1 if tx > 0 else x0
    y1 = y0 + 1 if ty > 0 else y0
    if x0 < 0 or y0 < 0 or x1 >= w or y1 >= h:
        raise IndexError(f"sample at (x={x:.3f}, y={y:.3f}) falls outside a {w}x{h} channel")
    a, b = channel[y0, x0], channel[y0, x1]
    c, d = channel[y1, x0], channel[y1, x1]
    top = a + tx * (b - a)
    bottom = c + tx * (d - c)
    return float(top + ty * (bottom - top))


def ljp_code(channel, geometry: SamplingGeometry, center: tuple[int, int],
             interpolation: str = "bilinear") -> int:
    """Binary pattern code of one centre pixel (the scalar reference path)."""
    channel = np.asarray(channel, dtype=np.float64)
    b = geometry.border
    row, col = center
    h, w = channel.shape
    if not (b <= row < h - b and b <= col < w - b):
        raise ValueError(f"center {center} is not a valid center for border {b} "
                         f"on a {w}x{h} channel")
    c = channel[row, col]
    code = 0
    for k, off in enumerate(geometry.offsets):
        if sample_neighbor(channel, center, off, interpolation) - c >= 0:
            code |= 1 << k
    return code


def _shifted(channel: np.ndarray, b: int, dy: int, dx: int) -> np.ndarray:
    h, w = channel.shape
    return channel[b + dy:h - b + dy, b + dx:w - b + dx]


def _sample_plane(channel: np.ndarray, b: int, dx: float, dy: float,
                  interpolation: str) -> np.ndarray:
    if interpolation == "nearest":
        dx, dy = _round_offset(dx), _round_offset(dy)
    x0, y0 = math.floor(dx), math.floor(dy)
    tx, ty = dx - x0, dy - y0
    a = _shifted(channel, b, y0, x0)
    if tx == 0 and ty == 0:
        return a
    if ty == 0:
        return a + tx * (_shifted(channel, b, y0, x0 + 1) - a)
    c = _shifted(channel, b, y0 + 1, x0)
    if tx == 0:
        return a + ty * (c - a)
    top = a + tx * (_shifted(channel, b, y0, x0 + 1) - a)
    bottom = c + tx * (_shifted(channel, b, y0 + 1, x0 + 1) - c)
    return top + ty * (bottom - top)


def code_map(channel, geometry: SamplingGeometry = SamplingGeometry(),
             interpolation: str = "bilinear") -> np.ndarray:
    """Codes for every valid centre of one channel, shape ``valid_shape``."""
    if interpolation not in ("bilinear", "nearest"):
        raise ValueError(f"unknown interpolation {interpolation!r}")
    channel = np.asarray(channel, dtype=np.float64)
    b = geometry.border
    vh, vw = geometry.valid_shape(channel.shape)
    if vh < 1 or vw < 1:
        raise ValueError(f"channel {channel.shape[1]}x{channel.shape[0]} has no valid centers "
                         f"for radius {geometry.radius}")
    centre = _shifted(channel, b, 0, 0)
    dtype = np.uint8 if geometry.neighbors <= 8 else np.uint32
    codes = np.zeros((vh, vw), dtype=dtype)
    for k, (dx, dy) in enumerate(geometry.offsets):
        plane = _sample_plane(channel, b, dx, dy, interpolation)
        codes |= ((plane - centre) >= 0).astype(dtype) << dtype(k)
    return codes


@lru_cache(maxsize=None)
def uniform_table(neighbors: int) -> np.ndarray:
    """Lookup table code -> bin for the u2 (uniform) mapping.

    Codes with at most two circular 0/1 transitions get their own bin in
    increasing code order; every other code shares the last bin.
    """
    n_codes = 1 << neighbors
    uniform = []
    for code in range(n_codes):
        rotated = (code >> 1) | ((code & 1) << (neighbors - 1))
        if bin(code ^ rotated).count("1") <= 2:
            uniform.append(code)
    table = np.full(n_codes, len(uniform), dtype=np.int64)
    table[uniform] = np.arange(len(uniform))
    table.setflags(write=False)
    return table


def n_uniform_bins(neighbors: int) -> int:
    return neighbors * (neighbors - 1) + 3


def uniform_map(code: int, neighbors: int = 8) -> int:
    if not 0 <= code < (1 << neighbors):
        raise ValueError(f"code {code} out of range for {neighbors} neighbors")
    return int(uniform_table(neighbors)[code])


def histogram(codes, mapping: str = "uniform", neighbors: int = 8,
              normalize: bool = True) -> np.ndarray:
    """Histogram of a code map, normalized to unit sum by default."""
    codes = np.asarray(codes)
    if codes.size == 0:
        raise ValueError("cannot take the histogram of an empty code map")
    if mapping == "uniform":
        bins = uniform_table(neighbors)[codes.ravel()]
        n_bins = n_uniform_bins(neighbors)
    elif mapping == "raw":
        bins = codes.ravel().astype(np.int64)
        n_bins = 1 << neighbors
    else:
        raise ValueError(f"unknown mapping {mapping!r}")
    counts = np.bincount(bins, minlength=n_bins)
    if not normalize:
        return counts
    return counts / codes.size


@dataclass(frozen=True)
class FeatureConfig:
    """Descriptor parameters. Defaults give the 295-dimensional feature."""

    sigma: float = 1.0
    radius: float = 1.0
    neighbors: int = 8
    include_zeroth: bool = False
    mapping: str = "uniform"
    interpolation: str = "bilinear"
    support_radius: int | None = None
    weber: float = WEBER_CONSTANT

    def __post_init__(self):
        if self.mapping not in ("uniform", "raw"):
            raise ValueError(f"mapping must be 'uniform' or 'raw', got {self.mapping!r}")
        if self.interpolation not in ("bilinear", "nearest"):
            raise ValueError(f"interpolation must be 'bilinear' or 'nearest', "
                             f"got {self.interpolation!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def geometry(self) -> SamplingGeometry:
        return SamplingGeometry(self.radius, self.neighbors)

    @property
    def channels(self) -> tuple[tuple[int, int], ...]:
        return CHANNELS if self.include_zeroth else CHANNELS[1:]

    @property
    def bins_per_channel(self) -> int:
        if self.mapping == "uniform":
            return n_uniform_bins(self.neighbors)
        return 1 << self.neighbors

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def feature_length(config: FeatureConfig = FeatureConfig()) -> int:
    return config.bins_per_channel * len(config.channels)


def ljp_code_maps(image, config: FeatureConfig = FeatureConfig()) -> dict:
    """Code map per jet channel, keyed by ``(m, n)``."""
    jet = compute_jet(image, config.sigma, config.support_radius)
    jet = contrast_normalize(jet, config.weber)
    return {mn: code_map(jet[mn], config.geometry, config.interpolation)
            for mn in config.channels}


def extract_feature(image, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """LJP feature: concatenated per-channel normalized code histograms."""
    maps = ljp_code_maps(image, config)
    return np.concatenate([histogram(maps[mn], config.mapping, config.neighbors)
                           for mn in config.channels])


def lbp_feature(image, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Plain LBP baseline: the same encoder applied to the raw image."""
    codes = code_map(image, config.geometry, config.interpolation)
    return histogram(codes, config.mapping, config.neighbors).astype(np.float64)
