"""Shared scene builders and oracles for the test suite."""

import numpy as np
import pytest

from splatforge.core.activations import colors_to_sh_dc, inverse_sigmoid
from splatforge.core.types import Camera, GaussianCloud


def random_cloud(rng, n, spread=0.4, scale_range=(-3.5, -2.0),
                 opacity_range=(-2.0, 2.0)):
    """Generic random test cloud (float32 storage)."""
    return GaussianCloud(
        positions=rng.uniform(-spread, spread, (n, 3)).astype(np.float32),
        colors_dc=rng.uniform(-1.2, 1.2, (n, 3)).astype(np.float32),
        opacities_raw=rng.uniform(*opacity_range, (n, 1)).astype(np.float32),
        scales_raw=rng.uniform(*scale_range, (n, 3)).astype(np.float32),
        rotations=rng.normal(size=(n, 4)).astype(np.float32),
    )


def sphere_surface_cloud(rng, n, radius=0.5, opacity=0.8):
    """Shell of splats sized by nearest-neighbor spacing; procedural texture."""
    from splatforge.initialization import nearest_neighbor_distances

    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    pos = (radius * v).astype(np.float32)
    colors = np.clip(0.5 + 0.45 * np.stack(
        [np.sin(7 * pos[:, 0]), np.cos(9 * pos[:, 1]), np.sin(11 * pos[:, 2])],
        axis=1), 0.02, 0.98)
    nn = np.maximum(nearest_neighbor_distances(pos), 1e-7)
    q = np.zeros((n, 4), dtype=np.float32)
    q[:, 0] = 1.0
    return GaussianCloud(
        positions=pos,
        colors_dc=colors_to_sh_dc(colors).astype(np.float32),
        opacities_raw=np.full((n, 1), inverse_sigmoid(opacity), dtype=np.float32),
        scales_raw=np.log(nn).astype(np.float32)[:, None].repeat(3, axis=1),
        rotations=q,
    )


# Gradient-check scenes: every nonsmooth regime is kept at a distance so the
# h=1e-3 central quotient stays inside one smooth branch. Depths are strictly
# separated (no sort flips), opacities stay below the sigma clamp, colors away
# from their [0,1] clamp, splats are anisotropic (well-conditioned rotation
# gradients) and large relative to h (low curvature).
FD_SCENE_SCALE = 8.0


def gradcheck_scene(seed, n=30, size=32):
    rng = np.random.default_rng(1000 + seed)
    s = FD_SCENE_SCALE
    pos = rng.uniform(-0.35, 0.35, (n, 3)) * s
    pos[:, 1] = (np.linspace(-0.4, 0.4, n) + rng.uniform(-0.008, 0.008, n)) * s
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    base_s = rng.uniform(-1.9, -1.5, (n, 1))
    jitter = np.stack([rng.uniform(-0.55, -0.15, n), rng.uniform(-0.05, 0.05, n),
                       rng.uniform(0.15, 0.55, n)], axis=1)
    scales = base_s + rng.permuted(jitter, axis=1) + np.log(s)
    colors = rng.uniform(-1.2, 1.2, (n, 3))
    opacities = rng.uniform(-1.5, 0.3, (n, 1))
    cloud = GaussianCloud(
        positions=pos.astype(np.float32),
        colors_dc=colors.astype(np.float32),
        opacities_raw=opacities.astype(np.float32),
        scales_raw=scales.astype(np.float32),
        rotations=q.astype(np.float32),
    )
    camera = Camera(radius=2.5 * s, azimuth=90.0, elevation=0.0, width=size, height=size)
    grad_field = smooth_field(rng, size, size)
    return cloud, camera, grad_field


def smooth_field(rng, h, w, mix=0.25):
    """Low-frequency random weight field plus a mild white-noise component."""
    coarse = rng.normal(size=(5, 5, 3))
    ys = np.linspace(0, 4, h)
    xs = np.linspace(0, 4, w)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, 4)
    x1 = np.minimum(x0 + 1, 4)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    c00 = coarse[y0][:, x0]
    c01 = coarse[y0][:, x1]
    c10 = coarse[y1][:, x0]
    c11 = coarse[y1][:, x1]
    base = c00 * (1 - fy) * (1 - fx) + c01 * (1 - fy) * fx \
        + c10 * fy * (1 - fx) + c11 * fy * fx
    return base + mix * rng.normal(size=(h, w, 3))


def psnr(a, b):
    mse = float(np.mean((np.asarray(a, np.float64) - np.asarray(b, np.float64)) ** 2))
    if mse == 0:
        return np.inf
    return -10.0 * np.log10(mse)


def central_difference(loss, arr, k, h=1e-3):
    """Central quotient on a float32 parameter; uses the realized step width."""
    flat = arr.reshape(-1)
    orig = flat[k]
    flat[k] = np.float32(orig + h)
    lp = loss()
    flat[k] = np.float32(orig - h)
    lm = loss()
    realized = float(np.float32(orig + h)) - float(np.float32(orig - h))
    flat[k] = orig
    return (lp - lm) / realized


@pytest.fixture
def rng():
    return np.random.default_rng(0)
