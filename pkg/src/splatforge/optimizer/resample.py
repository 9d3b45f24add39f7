"""Box-filter downscale and its exact adjoint for gradient upscaling."""

from __future__ import annotations

import numpy as np

from splatforge.errors import InvalidParameterError


def downscale(image: np.ndarray, target: int) -> np.ndarray:
    """Average f x f blocks down to target x target; preserves the mean."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != image.shape[1]:
        raise InvalidParameterError(f"expected square (H, H, C) image, got {image.shape}")
    src = image.shape[0]
    if target < 1 or src % target != 0:
        raise InvalidParameterError(f"source size {src} not divisible by target {target}")
    f = src // target
    if f == 1:
        return image.copy()
    return image.reshape(target, f, target, f, -1).mean(axis=(1, 3))


def upscale_adjoint(grad: np.ndarray, target: int) -> np.ndarray:
    """Exact adjoint of downscale: spread each coarse gradient over its block / f^2."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.ndim != 3 or grad.shape[0] != grad.shape[1]:
        raise InvalidParameterError(f"expected square (h, h, C) gradient, got {grad.shape}")
    src = grad.shape[0]
    if target < src or target % src != 0:
        raise InvalidParameterError(f"target size {target} not divisible by source {src}")
    f = target // src
    if f == 1:
        return grad.copy()
    out = np.repeat(np.repeat(grad, f, axis=0), f, axis=1)
    return out / float(f * f)
