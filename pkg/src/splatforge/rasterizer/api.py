"""Differentiable rendering entry points.

render() projects, bins, and composites; render_backward() consumes the saved
forward context and returns gradients for every raw cloud parameter, chaining
through compositing, the screen-space Gaussian, the projection Jacobian, the
factored covariance, and the activations.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from splatforge.core.activations import SH0, quat_to_rotation
from splatforge.core.types import Camera, GaussianCloud
from splatforge.errors import ContractViolationError
from splatforge.rasterizer.backend import get_backend
from splatforge.rasterizer.common import (
    DEFAULT_STOP_TRANSMITTANCE,
    RenderedImage,
    as_background,
)
from splatforge.rasterizer.projection import ProjectedScene, project_cloud


@dataclass
class RenderContext:
    proj: ProjectedScene
    backend_state: dict
    backend_name: str
    background: np.ndarray
    stop_t: float


def render(cloud: GaussianCloud, camera: Camera, background=(0.0, 0.0, 0.0), *,
           stop_transmittance: float = DEFAULT_STOP_TRANSMITTANCE,
           backend=None, num_threads: int = 0, save_ctx: bool = False) -> RenderedImage:
    """Tiled forward render; save_ctx keeps the buffers render_backward needs."""
    bg = as_background(background)
    if backend is None or isinstance(backend, str):
        be = get_backend(backend)
    else:
        be = backend
    if num_threads <= 0:
        num_threads = os.cpu_count() or 1
    proj = project_cloud(cloud, camera)
    rgb, trans, ncontrib, state = be.forward(proj, stop_transmittance, num_threads)
    rgb += trans[:, :, None] * bg
    image = RenderedImage(rgb=rgb, final_transmittance=trans, contrib_count=ncontrib)
    if save_ctx:
        image.ctx = RenderContext(proj, state, be.name, bg, stop_transmittance)
    return image


def render_backward(image: RenderedImage, grad_rgb: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of <grad_rgb, rendered image> w.r.t. the raw cloud parameters.

    Requires the image from render(..., save_ctx=True). Returns float64 arrays
    keyed like GaussianCloud.param_arrays().
    """
    ctx = image.ctx
    if not isinstance(ctx, RenderContext):
        raise ContractViolationError("render_backward needs an image rendered with save_ctx=True")
    grad_rgb = np.ascontiguousarray(grad_rgb, dtype=np.float64)
    if grad_rgb.shape != image.rgb.shape:
        raise ContractViolationError(
            f"grad_rgb shape {grad_rgb.shape} does not match image {image.rgb.shape}")

    be = get_backend(ctx.backend_name)
    gmean, gcov, gcol, galpha = be.backward(
        ctx.proj, ctx.backend_state, image.final_transmittance, grad_rgb, ctx.background)
    return _projection_backward(ctx.proj, gmean, gcov, gcol, galpha)


# Basis matrices d(R)/d(q_k) for a unit quaternion (w, x, y, z); contracted
# against dL/dR below. Built symbolically once per call batch.
def _rotation_jacobian(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    zero = np.zeros_like(w)
    jw = np.stack([zero, -z, y, z, zero, -x, -y, x, zero], axis=1)
    jx = np.stack([zero, y, z, y, -2 * x, -w, z, w, -2 * x], axis=1)
    jy = np.stack([-2 * y, x, w, x, zero, z, -w, z, -2 * y], axis=1)
    jz = np.stack([-2 * z, -w, x, w, -2 * z, y, x, y, zero], axis=1)
    return 2.0 * np.stack([jw, jx, jy, jz], axis=1).reshape(-1, 4, 3, 3)


def _projection_backward(proj: ProjectedScene, gmean, gcov, gcol, galpha) -> dict[str, np.ndarray]:
    n = proj.num_source
    out = {
        "position": np.zeros((n, 3), dtype=np.float64),
        "color": np.zeros((n, 3), dtype=np.float64),
        "opacity": np.zeros((n, 1), dtype=np.float64),
        "scaling": np.zeros((n, 3), dtype=np.float64),
        "rotation": np.zeros((n, 4), dtype=np.float64),
    }
    m = proj.num_splats
    if m == 0:
        return out
    src = proj.source_index

    # color: rgb = clip(0.5 + SH0 * dc, 0, 1)
    inside = (proj.rgb_unclamped > 0.0) & (proj.rgb_unclamped < 1.0)
    out["color"][src] = SH0 * gcol * inside

    # opacity: alpha = sigmoid(raw)
    out["opacity"][src, 0] = galpha * proj.alphas * (1.0 - proj.alphas)

    # Full symmetric dL/dcov2d from the packed (xx, xy, yy) accumulation.
    g2 = np.empty((m, 2, 2), dtype=np.float64)
    g2[:, 0, 0] = gcov[:, 0]
    g2[:, 0, 1] = g2[:, 1, 0] = 0.5 * gcov[:, 1]
    g2[:, 1, 1] = gcov[:, 2]

    f = proj.focal
    t = proj.t_cam
    inv_z = 1.0 / t[:, 2]
    inv_z2 = inv_z * inv_z
    jac = np.zeros((m, 2, 3), dtype=np.float64)
    jac[:, 0, 0] = f * inv_z
    jac[:, 1, 1] = f * inv_z
    jac[:, 0, 2] = -f * t[:, 0] * inv_z2
    jac[:, 1, 2] = -f * t[:, 1] * inv_z2

    rot = quat_to_rotation(proj.quats)              # (m, 3, 3)
    s2 = proj.scales ** 2
    sigma3 = np.einsum("nab,nb,ncb->nac", rot, s2, rot)
    w = proj.rot_wc
    sigma_cam = np.einsum("ab,nbc,dc->nad", w, sigma3, w)

    # cov2d = J Sigma_cam J^T
    dj = 2.0 * np.einsum("nab,nbc,ncd->nad", g2, jac, sigma_cam)
    dsig_cam = np.einsum("nba,nbc,ncd->nad", jac, g2, jac)
    dsig3 = np.einsum("ba,nbc,cd->nad", w, dsig_cam, w)

    # camera-space position gradient: mean2d via J, plus J's own t-dependence
    gt = np.einsum("nba,nb->na", jac, gmean)
    gt[:, 0] += dj[:, 0, 2] * (-f * inv_z2)
    gt[:, 1] += dj[:, 1, 2] * (-f * inv_z2)
    gt[:, 2] += (dj[:, 0, 0] + dj[:, 1, 1]) * (-f * inv_z2) \
        + dj[:, 0, 2] * (2.0 * f * t[:, 0] * inv_z * inv_z2) \
        + dj[:, 1, 2] * (2.0 * f * t[:, 1] * inv_z * inv_z2)
    out["position"][src] = gt @ w

    # scaling: eigvals of Sigma3 are s^2; raw is log(s)
    rtg3r = np.einsum("nba,nbc,ncd->nad", rot, dsig3, rot)
    diag = np.einsum("naa->na", rtg3r)
    out["scaling"][src] = 2.0 * s2 * diag

    # rotation: dL/dR = 2 dsig3 R D, contracted with dR/dq, then through
    # the normalization q_hat = q / |q|
    rd = rot * s2[:, None, :]
    dlr = 2.0 * np.einsum("nab,nbc->nac", dsig3, rd)
    basis = _rotation_jacobian(proj.quats)
    gq_hat = np.einsum("nab,nkab->nk", dlr, basis)
    qdot = np.einsum("nk,nk->n", proj.quats, gq_hat)
    gq = (gq_hat - proj.quats * qdot[:, None]) / proj.quats_raw_norm[:, None]
    out["rotation"][src] = gq
    return out
