"""Parameter activations and the factored covariance construction.

Raw storage is unconstrained so first-order optimizers can step freely:
opacity is a logit (sigmoid -> (0,1)), scale is a log (exp -> positive),
rotations are normalized at the point of use. Colors are degree-0 spherical
harmonics with the standard SH constant so exported assets load in stock
splat viewers: rgb = 0.5 + SH0 * dc.
"""

from __future__ import annotations

import numpy as np

from splatforge.errors import InvalidParameterError

SH0 = 0.28209479177387814

# Smallest activated scale; keeps covariances positive definite.
MIN_SCALE = 1e-7


def sigmoid(x):
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype if x.dtype.kind == "f" else np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def inverse_sigmoid(y):
    y = np.asarray(y, dtype=np.float64)
    return np.log(y / (1.0 - y))


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm < 1e-12):
        raise InvalidParameterError("zero-norm quaternion")
    return q / norm


def quat_to_rotation(q: np.ndarray) -> np.ndarray:
    """Unit quaternion(s) (w, x, y, z) to rotation matrix; batched over leading dims."""
    q = quat_normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    r = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    r[..., 0, 0] = 1 - 2 * (y * y + z * z)
    r[..., 0, 1] = 2 * (x * y - w * z)
    r[..., 0, 2] = 2 * (x * z + w * y)
    r[..., 1, 0] = 2 * (x * y + w * z)
    r[..., 1, 1] = 1 - 2 * (x * x + z * z)
    r[..., 1, 2] = 2 * (y * z - w * x)
    r[..., 2, 0] = 2 * (x * z - w * y)
    r[..., 2, 1] = 2 * (y * z + w * x)
    r[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return r


def covariance_from_scale_rotation(scale: np.ndarray, rotation: np.ndarray) -> np.ndarray:
    """Sigma = R S S^T R^T from activated per-axis scales and a quaternion.

    Batched: scale (..., 3), rotation (..., 4) -> (..., 3, 3). The result is
    symmetric positive definite with eigenvalues equal to the squared scales.
    """
    scale = np.asarray(scale, dtype=np.float64)
    rotation = np.asarray(rotation, dtype=np.float64)
    if not (np.isfinite(scale).all() and np.isfinite(rotation).all()):
        raise InvalidParameterError("non-finite scale or rotation")
    if np.any(scale <= 0):
        raise InvalidParameterError("scales must be > 0")
    rot = quat_to_rotation(rotation)
    rs = rot * scale[..., None, :]
    return rs @ np.swapaxes(rs, -1, -2)


def activate_params(cloud) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Activated (alpha (N,), scales (N,3), unit quaternions (N,4), rgb (N,3)).

    rgb is the SH0 reconstruction clamped to [0, 1]; the clamp keeps composited
    images inside [0, 1] while raw coefficients roam during optimization.
    """
    alpha = sigmoid(cloud.opacities_raw.astype(np.float64))[:, 0]
    scales = np.maximum(np.exp(cloud.scales_raw.astype(np.float64)), MIN_SCALE)
    quats = quat_normalize(cloud.rotations)
    rgb = np.clip(sh_dc_to_colors(cloud.colors_dc), 0.0, 1.0)
    return alpha, scales, quats, rgb


def sh_dc_to_colors(dc: np.ndarray) -> np.ndarray:
    return 0.5 + SH0 * np.asarray(dc, dtype=np.float64)


def colors_to_sh_dc(rgb: np.ndarray) -> np.ndarray:
    return (np.asarray(rgb, dtype=np.float64) - 0.5) / SH0
