"""Perspective projection of 3D Gaussians to screen-space splats.

Pinhole camera with first-order (EWA-style) covariance propagation:
cov2d = J W Sigma W^T J^T restricted to the upper-left 2x2, plus a small
low-pass on the diagonal that keeps the projected covariance invertible.
Splats behind the near plane or whose 3-sigma screen extent misses the image
are culled. Survivors come out depth-sorted (ties broken by source index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from splatforge.core.activations import (
    MIN_SCALE,
    quat_normalize,
    sh_dc_to_colors,
    sigmoid,
)
from splatforge.core.types import Camera, GaussianCloud
from splatforge.errors import InvalidParameterError
from splatforge.rasterizer.common import COV2D_LOWPASS, NEAR_PLANE, Splat2D


def gaussian_weight(offset: np.ndarray, cov: np.ndarray) -> float:
    """Unnormalized Gaussian falloff exp(-0.5 offset^T cov^-1 offset).

    Works in any dimension. A singular covariance is regularized by adding
    COV2D_LOWPASS * I until it factors; finite inputs never raise.
    """
    offset = np.asarray(offset, dtype=np.float64).reshape(-1)
    cov = np.asarray(cov, dtype=np.float64)
    d = offset.shape[0]
    if cov.shape != (d, d):
        raise InvalidParameterError(f"cov must be {d}x{d}, got {cov.shape}")
    if not (np.isfinite(offset).all() and np.isfinite(cov).all()):
        raise InvalidParameterError("non-finite input to gaussian_weight")
    cov = 0.5 * (cov + cov.T)
    for _ in range(64):
        try:
            chol = np.linalg.cholesky(cov)
            break
        except np.linalg.LinAlgError:
            cov = cov + COV2D_LOWPASS * np.eye(d)
    else:
        raise InvalidParameterError("covariance could not be regularized")
    y = np.linalg.solve(chol, offset)
    return float(np.exp(-0.5 * np.dot(y, y)))


@dataclass
class ProjectedScene:
    """Depth-sorted screen-space splats plus the saved state the backward needs.

    All arrays are float64 and indexed by sorted splat position; source_index
    maps back into the cloud. rects are half-open pixel bounds [x0,x1) x [y0,y1)
    of the 3-sigma support, already clipped to the image.
    """

    means2d: np.ndarray       # (M, 2)
    covs2d: np.ndarray        # (M, 3) packed (xx, xy, yy), low-passed
    conics: np.ndarray        # (M, 3) packed inverse (a, b, c)
    depths: np.ndarray        # (M,)
    colors: np.ndarray        # (M, 3) activated rgb
    alphas: np.ndarray        # (M,) activated opacity
    rects: np.ndarray         # (M, 4) int32 (x0, y0, x1, y1)
    source_index: np.ndarray  # (M,) int32
    width: int
    height: int
    # saved activation / projection state for the backward chain
    t_cam: np.ndarray         # (M, 3) camera-space centers
    rot_wc: np.ndarray        # (3, 3) world-to-camera rotation
    focal: float
    scales: np.ndarray        # (M, 3) activated scales
    quats: np.ndarray         # (M, 4) normalized quaternions
    quats_raw_norm: np.ndarray  # (M,) norms of the raw quaternions
    rgb_unclamped: np.ndarray  # (M, 3) SH0 reconstruction before [0,1] clamp
    num_source: int

    @property
    def num_splats(self) -> int:
        return self.means2d.shape[0]

    def splat(self, i: int) -> Splat2D:
        xx, xy, yy = self.covs2d[i]
        return Splat2D(
            mean2d=self.means2d[i].copy(),
            cov2d=np.array([[xx, xy], [xy, yy]]),
            depth=float(self.depths[i]),
            color=self.colors[i].copy(),
            opacity=float(self.alphas[i]),
            source_index=int(self.source_index[i]),
        )


def intrinsics(camera: Camera) -> tuple[float, float, float]:
    """(focal_px, cx, cy); pixel centers sit at integer + 0.5."""
    return camera.focal_px, 0.5 * camera.width, 0.5 * camera.height


def _camera_space_covariance(scales, quats, rot_wc):
    """Entries of W Sigma W^T via the factorization (W R S)(W R S)^T.

    Everything stays element-wise over the splat axis; no batched matmuls.
    Returns the six unique entries (s00, s01, s02, s11, s12, s22).
    """
    w_, x, y, z = quats[:, 0], quats[:, 1], quats[:, 2], quats[:, 3]
    r = (
        1 - 2 * (y * y + z * z), 2 * (x * y - w_ * z), 2 * (x * z + w_ * y),
        2 * (x * y + w_ * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w_ * x),
        2 * (x * z - w_ * y), 2 * (y * z + w_ * x), 1 - 2 * (x * x + y * y),
    )
    s0, s1, s2 = scales[:, 0], scales[:, 1], scales[:, 2]
    rs = (r[0] * s0, r[1] * s1, r[2] * s2,
          r[3] * s0, r[4] * s1, r[5] * s2,
          r[6] * s0, r[7] * s1, r[8] * s2)
    c = []
    for i in range(3):
        wi0, wi1, wi2 = rot_wc[i]
        for j in range(3):
            c.append(wi0 * rs[j] + wi1 * rs[3 + j] + wi2 * rs[6 + j])
    s00 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2]
    s01 = c[0] * c[3] + c[1] * c[4] + c[2] * c[5]
    s02 = c[0] * c[6] + c[1] * c[7] + c[2] * c[8]
    s11 = c[3] * c[3] + c[4] * c[4] + c[5] * c[5]
    s12 = c[3] * c[6] + c[4] * c[7] + c[5] * c[8]
    s22 = c[6] * c[6] + c[7] * c[7] + c[8] * c[8]
    return s00, s01, s02, s11, s12, s22


def project_cloud(cloud: GaussianCloud, camera: Camera) -> ProjectedScene:
    """Project every Gaussian; cull, low-pass, and depth-sort the survivors.

    Near-plane culling and the depth sort happen first on compact arrays so
    the remaining math runs once, already in sorted order.
    """
    rot_wc, eye = camera.world_to_camera()
    f, cx, cy = intrinsics(camera)

    pos = cloud.positions.astype(np.float64)
    t_all = (pos - eye) @ rot_wc.T
    tz_all = t_all[:, 2]
    idx = np.nonzero(tz_all > NEAR_PLANE)[0]
    order = idx[np.argsort(tz_all[idx], kind="stable")]

    # gather compact raw inputs, then activate (same element-wise values as
    # activate_params on the full cloud)
    t = t_all[order]
    rot_raw = cloud.rotations[order].astype(np.float64)
    alpha = sigmoid(cloud.opacities_raw[order].astype(np.float64))[:, 0]
    scales = np.maximum(np.exp(cloud.scales_raw[order].astype(np.float64)), MIN_SCALE)
    quats = quat_normalize(rot_raw)
    rgb_unclamped = sh_dc_to_colors(cloud.colors_dc[order])
    rgb = np.clip(rgb_unclamped, 0.0, 1.0)

    tz = t[:, 2]
    inv_z = 1.0 / tz
    inv_z2 = inv_z * inv_z
    mx = f * t[:, 0] * inv_z + cx
    my = f * t[:, 1] * inv_z + cy

    # J rows: [f/z, 0, -f x/z^2], [0, f/z, -f y/z^2]
    j02 = -f * t[:, 0] * inv_z2
    j12 = -f * t[:, 1] * inv_z2
    fz = f * inv_z

    s00, s01, s02, s11, s12, s22 = _camera_space_covariance(scales, quats, rot_wc)
    # cov2d = J Sigma_cam J^T expanded by hand (J is sparse).
    xx = fz * fz * s00 + 2 * fz * j02 * s02 + j02 * j02 * s22 + COV2D_LOWPASS
    xy = fz * fz * s01 + fz * j12 * s02 + j02 * fz * s12 + j02 * j12 * s22
    yy = fz * fz * s11 + 2 * fz * j12 * s12 + j12 * j12 * s22 + COV2D_LOWPASS

    rx = 3.0 * np.sqrt(np.maximum(xx, 0.0))
    ry = 3.0 * np.sqrt(np.maximum(yy, 0.0))
    x0 = np.maximum(np.ceil(mx - rx - 0.5), 0.0)
    y0 = np.maximum(np.ceil(my - ry - 0.5), 0.0)
    x1 = np.minimum(np.floor(mx + rx - 0.5) + 1.0, float(camera.width))
    y1 = np.minimum(np.floor(my + ry - 0.5) + 1.0, float(camera.height))

    det = xx * yy - xy * xy
    keep = ((x1 > x0) & (y1 > y0) & (det > 0.0)
            & np.isfinite(mx) & np.isfinite(my))
    if not keep.all():
        (t, rot_raw, alpha, scales, quats, rgb_unclamped, rgb, tz, mx, my,
         xx, xy, yy, x0, y0, x1, y1, det, order) = (
            a[keep] for a in (t, rot_raw, alpha, scales, quats, rgb_unclamped,
                              rgb, tz, mx, my, xx, xy, yy, x0, y0, x1, y1,
                              det, order))

    inv_det = 1.0 / det
    conics = np.stack([yy * inv_det, -xy * inv_det, xx * inv_det], axis=1)

    return ProjectedScene(
        means2d=np.ascontiguousarray(np.stack([mx, my], axis=1)),
        covs2d=np.ascontiguousarray(np.stack([xx, xy, yy], axis=1)),
        conics=np.ascontiguousarray(conics),
        depths=np.ascontiguousarray(tz),
        colors=np.ascontiguousarray(rgb),
        alphas=np.ascontiguousarray(alpha),
        rects=np.ascontiguousarray(
            np.stack([x0, y0, x1, y1], axis=1).astype(np.int32)),
        source_index=order.astype(np.int32),
        width=camera.width,
        height=camera.height,
        t_cam=np.ascontiguousarray(t),
        rot_wc=rot_wc,
        focal=f,
        scales=np.ascontiguousarray(scales),
        quats=np.ascontiguousarray(quats),
        quats_raw_norm=np.linalg.norm(rot_raw, axis=1),
        rgb_unclamped=np.ascontiguousarray(rgb_unclamped),
        num_source=cloud.num_gaussians,
    )


def project_gaussian(camera: Camera, position, cov3d, color, opacity) -> Splat2D | None:
    """Project a single Gaussian with a prebuilt 3D covariance; None when culled."""
    position = np.asarray(position, dtype=np.float64).reshape(3)
    cov3d = np.asarray(cov3d, dtype=np.float64).reshape(3, 3)
    rot_wc, eye = camera.world_to_camera()
    f, cx, cy = intrinsics(camera)
    t = rot_wc @ (position - eye)
    if t[2] <= NEAR_PLANE:
        return None
    jac = np.array([
        [f / t[2], 0.0, -f * t[0] / t[2] ** 2],
        [0.0, f / t[2], -f * t[1] / t[2] ** 2],
    ])
    cov2d = jac @ rot_wc @ cov3d @ rot_wc.T @ jac.T + COV2D_LOWPASS * np.eye(2)
    mean2d = np.array([f * t[0] / t[2] + cx, f * t[1] / t[2] + cy])
    rx, ry = 3.0 * np.sqrt(np.diag(cov2d))
    if (mean2d[0] + rx < 0 or mean2d[0] - rx > camera.width
            or mean2d[1] + ry < 0 or mean2d[1] - ry > camera.height):
        return None
    return Splat2D(
        mean2d=mean2d,
        cov2d=cov2d,
        depth=float(t[2]),
        color=np.asarray(color, dtype=np.float64).reshape(3),
        opacity=float(opacity),
        source_index=0,
    )
