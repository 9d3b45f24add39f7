"""Benchmark the compiled and pure-Python compositing backends side by side.

    python -m splatforge.bench [--gaussians N] [--size S] [--frames K]

Renders a procedurally generated sphere-shell cloud from orbiting cameras and
reports frames/sec per available backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from splatforge.core.activations import colors_to_sh_dc, inverse_sigmoid
from splatforge.core.types import Camera, GaussianCloud
from splatforge.initialization import nearest_neighbor_distances
from splatforge.rasterizer import available_backends, get_backend, render


def sphere_cloud(n: int, seed: int = 0, radius: float = 0.5) -> GaussianCloud:
    """A textured sphere shell with nearest-neighbor-sized isotropic splats."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    pos = (radius * v).astype(np.float32)
    colors = 0.5 + 0.5 * np.stack([np.sin(3 * pos[:, 0] * 7), np.cos(pos[:, 1] * 9),
                                   np.sin(pos[:, 2] * 11)], axis=1)
    colors = np.clip(colors, 0.02, 0.98)
    nn = np.maximum(nearest_neighbor_distances(pos), 1e-7)
    q = np.zeros((n, 4), dtype=np.float32)
    q[:, 0] = 1.0
    return GaussianCloud(
        positions=pos,
        colors_dc=colors_to_sh_dc(colors).astype(np.float32),
        opacities_raw=np.full((n, 1), inverse_sigmoid(0.8), dtype=np.float32),
        scales_raw=np.log(nn).astype(np.float32)[:, None].repeat(3, axis=1),
        rotations=q,
    )


def run(num_gaussians: int = 100_000, size: int = 512, frames: int = 20,
        seed: int = 0) -> dict[str, float]:
    cloud = sphere_cloud(num_gaussians, seed)
    cameras = [Camera(radius=2.5, azimuth=a, elevation=15.0, width=size, height=size)
               for a in np.linspace(-180, 180, 8, endpoint=False)]
    results = {}
    for name in available_backends():
        backend = get_backend(name)
        n_frames = frames if name == "compiled" else max(2, frames // 10)
        render(cloud, cameras[0], (0, 0, 0), backend=backend)  # warm-up
        start = time.perf_counter()
        for i in range(n_frames):
            render(cloud, cameras[i % len(cameras)], (0, 0, 0), backend=backend)
        elapsed = time.perf_counter() - start
        results[name] = n_frames / elapsed
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--gaussians", type=int, default=100_000)
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--frames", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    results = run(args.gaussians, args.size, args.frames, args.seed)
    for name, fps in results.items():
        print(f"{name:>9}: {fps:8.2f} frames/sec "
              f"({args.gaussians} gaussians at {args.size}x{args.size})")
    if len(results) == 2:
        print(f"  speedup: {results['compiled'] / results['python']:.1f}x")


if __name__ == "__main__":
    main()
