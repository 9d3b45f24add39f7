"""Shared rasterizer definitions: constants, splat records, image buffers.

The per-contribution opacity of a splat at a pixel is

    sigma = min(SIGMA_CLAMP, alpha * G(d2) * taper(d2)),   d2 = delta^T conic delta

where G is the Gaussian falloff exp(-d2/2) and taper is a C1 smoothstep that
takes the contribution to exactly zero at d2 = CUTOFF_D2. The compact support
makes tile binning by the 3-sigma screen ellipse lossless (tiled and reference
paths share the inclusion rule bit for bit), and the C1 profile keeps the
forward pass finite-difference friendly. Both paths evaluate contributions in
float64 regardless of storage dtype.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from splatforge.errors import InvalidParameterError

# Compositing per-splat opacity ceiling; bounds 1/(1-sigma) in the backward.
SIGMA_CLAMP = 0.99

# Stop compositing a pixel once transmittance drops below this. Cross-path
# error is bounded by this value, so it sits well under the 1e-5 agreement
# budget between the tiled and reference renderers.
DEFAULT_STOP_TRANSMITTANCE = 1e-6

# Squared Mahalanobis support: contributions vanish at 3 sigma ...
CUTOFF_D2 = 9.0
# ... with the smoothstep taper starting here. A wide band keeps the taper's
# higher derivatives small, which the finite-difference gradient checks see.
TAPER_START_D2 = 5.0

# Low-pass added to the projected 2D covariance diagonal (pixel^2).
COV2D_LOWPASS = 0.3

NEAR_PLANE = 0.01

TILE_SIZE = 16


def taper(d2):
    """C1 window: 1 below TAPER_START_D2, 0 above CUTOFF_D2, smoothstep between."""
    d2 = np.asarray(d2, dtype=np.float64)
    s = np.clip((CUTOFF_D2 - d2) / (CUTOFF_D2 - TAPER_START_D2), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def taper_deriv(d2):
    """d(taper)/d(d2); zero outside the taper band."""
    d2 = np.asarray(d2, dtype=np.float64)
    width = CUTOFF_D2 - TAPER_START_D2
    s = (CUTOFF_D2 - d2) / width
    inside = (s > 0.0) & (s < 1.0)
    out = np.zeros_like(d2)
    out[inside] = -6.0 * s[inside] * (1.0 - s[inside]) / width
    return out


def sigma_of(d2, alpha):
    """Per-pixel splat opacity before depth compositing (clamped, tapered)."""
    g = np.exp(-0.5 * np.asarray(d2, dtype=np.float64))
    return np.minimum(SIGMA_CLAMP, np.asarray(alpha, np.float64) * g * taper(d2))


@dataclass
class Splat2D:
    """A projected Gaussian ready for compositing."""

    mean2d: np.ndarray      # (2,) pixel coordinates
    cov2d: np.ndarray       # (2, 2) symmetric, low-pass regularized
    depth: float            # camera-space z
    color: np.ndarray       # (3,) activated RGB
    opacity: float          # activated alpha in (0, 1)
    source_index: int       # index into the GaussianCloud


@dataclass
class RenderedImage:
    """Forward-pass output; auxiliary buffers feed the backward pass.

    final_transmittance is prod(1 - sigma) over every composited splat;
    contrib_count is how many splats each pixel composited (pixels that hit
    the early-termination threshold stop counting there).
    """

    rgb: np.ndarray                  # (H, W, 3) float64 in [0, 1+eps]
    final_transmittance: np.ndarray  # (H, W) float64 in [0, 1]
    contrib_count: np.ndarray        # (H, W) int32
    ctx: object | None = field(default=None, repr=False)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]


def as_background(background) -> np.ndarray:
    bg = np.asarray(background, dtype=np.float64).reshape(-1)
    if bg.shape == (1,):
        bg = np.repeat(bg, 3)
    if bg.shape != (3,):
        raise InvalidParameterError(f"background must be a scalar or RGB triple, got {bg.shape}")
    if not np.isfinite(bg).all():
        raise InvalidParameterError("background must be finite")
    return bg
