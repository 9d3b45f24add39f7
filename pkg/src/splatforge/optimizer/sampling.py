"""Camera sampling for training and evaluation."""

from __future__ import annotations

import numpy as np

from splatforge.core.types import Camera
from splatforge.optimizer.config import CameraRanges


def sample_camera(rng: np.random.Generator, ranges: CameraRanges,
                  width: int, height: int) -> Camera:
    """Uniform spherical-orbit pose within the configured ranges, look-at origin."""
    radius = rng.uniform(*ranges.radius_range)
    azimuth = rng.uniform(*ranges.azimuth_range)
    elevation = rng.uniform(*ranges.elevation_range)
    return Camera(radius=float(radius), azimuth=float(azimuth),
                  elevation=float(elevation), width=width, height=height,
                  fov_y=ranges.fov_y)


class OrbitSampler:
    """Default training sampler: independent uniform draws per view."""

    def __init__(self, ranges: CameraRanges, width: int, height: int):
        self.ranges = ranges
        self.width = width
        self.height = height

    def sample(self, rng: np.random.Generator) -> Camera:
        return sample_camera(rng, self.ranges, self.width, self.height)


class FixedViewSampler:
    """Uniform choice among a fixed view set (mock-guidance runs, tests)."""

    def __init__(self, cameras: list[Camera]):
        if not cameras:
            raise ValueError("FixedViewSampler needs at least one camera")
        self.cameras = list(cameras)

    def sample(self, rng: np.random.Generator) -> Camera:
        return self.cameras[int(rng.integers(len(self.cameras)))]


def turntable_cameras(count: int = 120, radius: float = 4.0, elevation: float = 15.0,
                      width: int = 512, height: int = 512, fov_y: float = 49.0) -> list[Camera]:
    """Evenly spaced azimuths from -180 to 180 (endpoint excluded)."""
    azimuths = np.linspace(-180.0, 180.0, count, endpoint=False)
    return [Camera(radius=radius, azimuth=float(a), elevation=elevation,
                   width=width, height=height, fov_y=fov_y) for a in azimuths]
