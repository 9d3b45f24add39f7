"""Brute-force reference renderer: the correctness oracle for the tiled path.

Every projected splat is evaluated at every pixel in global depth order with
no tiling and no early termination. Identical contribution math (taper,
clamp) means the tiled path must agree to within its termination threshold.
"""

from __future__ import annotations

import numpy as np

from splatforge.core.types import Camera, GaussianCloud
from splatforge.rasterizer.common import (
    CUTOFF_D2,
    SIGMA_CLAMP,
    RenderedImage,
    as_background,
    sigma_of,
)
from splatforge.rasterizer.projection import project_cloud

_PIXEL_CHUNK = 2048


def composite_ray(colors, sigmas, stop_transmittance=None, depths=None):
    """Front-to-back composite of pre-sorted (color, sigma) pairs.

    Returns (rgb, final_transmittance, n_processed). Passing depths enables
    the sorted-input assertion in debug runs. stop_transmittance=None means
    composite everything (the reference behavior).
    """
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    sigmas = np.asarray(sigmas, dtype=np.float64).reshape(-1)
    if colors.shape[0] != sigmas.shape[0]:
        raise ValueError("colors and sigmas must pair up")
    if depths is not None and __debug__:
        d = np.asarray(depths, dtype=np.float64).reshape(-1)
        assert (np.diff(d) >= 0).all(), "composite_ray requires depth-sorted input"
    rgb = np.zeros(3, dtype=np.float64)
    trans = 1.0
    n = 0
    for i in range(sigmas.shape[0]):
        if stop_transmittance is not None and trans < stop_transmittance:
            break
        s = min(float(sigmas[i]), SIGMA_CLAMP)
        rgb += colors[i] * (s * trans)
        trans *= 1.0 - s
        n += 1
    return rgb, trans, n


def reference_render(cloud: GaussianCloud, camera: Camera, background=(0.0, 0.0, 0.0)) -> RenderedImage:
    bg = as_background(background)
    proj = project_cloud(cloud, camera)
    h, w = camera.height, camera.width
    rgb = np.zeros((h * w, 3), dtype=np.float64)
    trans = np.ones(h * w, dtype=np.float64)
    ncontrib = np.zeros(h * w, dtype=np.int32)

    m = proj.num_splats
    if m:
        ys, xs = np.divmod(np.arange(h * w), w)
        px = xs + 0.5
        py = ys + 0.5
        for lo in range(0, h * w, _PIXEL_CHUNK):
            hi = min(lo + _PIXEL_CHUNK, h * w)
            dx = px[None, lo:hi] - proj.means2d[:, 0:1]
            dy = py[None, lo:hi] - proj.means2d[:, 1:2]
            a = proj.conics[:, 0:1]
            b = proj.conics[:, 1:2]
            c = proj.conics[:, 2:3]
            d2 = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
            sig = sigma_of(d2, proj.alphas[:, None])
            sig[d2 >= CUTOFF_D2] = 0.0
            # exclusive prefix product of (1 - sigma) down the splat axis
            t_before = np.cumprod(1.0 - sig, axis=0)
            t_before = np.vstack([np.ones((1, hi - lo)), t_before[:-1]])
            weights = sig * t_before
            rgb[lo:hi] = np.einsum("mp,mc->pc", weights, proj.colors)
            trans[lo:hi] = t_before[-1] * (1.0 - sig[-1])
            ncontrib[lo:hi] = (sig > 0.0).sum(axis=0)

    rgb += trans[:, None] * bg
    return RenderedImage(
        rgb=rgb.reshape(h, w, 3),
        final_transmittance=trans.reshape(h, w),
        contrib_count=ncontrib.reshape(h, w),
    )
