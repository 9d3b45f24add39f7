"""Shared geometric and asset data types.

All array state is float32; quaternions use (w, x, y, z) order. Types are
plain values: freely copyable, no interior mutation. The training loop is the
single owner of the GaussianCloud it mutates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from splatforge.errors import EmptyInputError, InvalidParameterError


def _as_f32(a, shape_tail, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[1:] != shape_tail:
        raise InvalidParameterError(f"{name} must have shape (N, {shape_tail[0]}), got {arr.shape}")
    return arr


@dataclass
class GaussianCloud:
    """The optimizable splat asset.

    positions:     (N, 3) world-space centers
    colors_dc:     (N, 3) degree-0 SH coefficients
    opacities_raw: (N, 1) pre-activation logits, sigmoid -> alpha in (0, 1)
    scales_raw:    (N, 3) pre-activation log-scales, exp -> per-axis scale > 0
    rotations:     (N, 4) quaternions (w, x, y, z), normalized at point of use
    """

    positions: np.ndarray
    colors_dc: np.ndarray
    opacities_raw: np.ndarray
    scales_raw: np.ndarray
    rotations: np.ndarray

    def __post_init__(self):
        self.positions = _as_f32(self.positions, (3,), "positions")
        self.colors_dc = _as_f32(self.colors_dc, (3,), "colors_dc")
        self.opacities_raw = _as_f32(self.opacities_raw, (1,), "opacities_raw")
        self.scales_raw = _as_f32(self.scales_raw, (3,), "scales_raw")
        self.rotations = _as_f32(self.rotations, (4,), "rotations")
        n = self.positions.shape[0]
        if n < 1:
            raise EmptyInputError("GaussianCloud requires N >= 1")
        for name in ("colors_dc", "opacities_raw", "scales_raw", "rotations"):
            if getattr(self, name).shape[0] != n:
                raise InvalidParameterError(f"{name} leading dimension must match positions ({n})")
        self.validate_finite()

    def validate_finite(self):
        for name in ("positions", "colors_dc", "opacities_raw", "scales_raw", "rotations"):
            if not np.isfinite(getattr(self, name)).all():
                raise InvalidParameterError(f"non-finite values in {name}")

    @property
    def num_gaussians(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "GaussianCloud":
        return GaussianCloud(
            self.positions.copy(),
            self.colors_dc.copy(),
            self.opacities_raw.copy(),
            self.scales_raw.copy(),
            self.rotations.copy(),
        )

    def param_arrays(self) -> dict[str, np.ndarray]:
        """Raw parameter groups, keyed by the optimizer group names."""
        return {
            "position": self.positions,
            "color": self.colors_dc,
            "opacity": self.opacities_raw,
            "scaling": self.scales_raw,
            "rotation": self.rotations,
        }


@dataclass
class ColoredPointCloud:
    """Positions plus RGB colors in [0, 1]."""

    positions: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        self.positions = _as_f32(self.positions, (3,), "positions")
        self.colors = _as_f32(self.colors, (3,), "colors")
        if self.positions.shape[0] != self.colors.shape[0]:
            raise InvalidParameterError("positions and colors must share leading dimension")
        if self.colors.size and (self.colors.min() < 0.0 or self.colors.max() > 1.0):
            raise InvalidParameterError("colors must lie in [0, 1]")

    @property
    def num_points(self) -> int:
        return self.positions.shape[0]


@dataclass
class TriangleMesh:
    """Triangle mesh; vertex colors are optional (absent for untextured bodies)."""

    vertices: np.ndarray
    faces: np.ndarray
    vertex_colors: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = _as_f32(self.vertices, (3,), "vertices")
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise InvalidParameterError(f"faces must have shape (F, 3), got {self.faces.shape}")
        v = self.vertices.shape[0]
        if v < 3:
            raise InvalidParameterError("mesh requires at least 3 vertices")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= v):
            raise InvalidParameterError("face indices out of range")
        if self.vertex_colors is not None:
            self.vertex_colors = _as_f32(self.vertex_colors, (3,), "vertex_colors")
            if self.vertex_colors.shape[0] != v:
                raise InvalidParameterError("vertex_colors must match vertex count")

    @property
    def has_colors(self) -> bool:
        return self.vertex_colors is not None


@dataclass
class Camera:
    """Spherical-orbit camera pose plus pinhole intrinsics.

    azimuth/elevation in degrees; elevation measured from the XY plane toward
    +Z (the world up axis). fov_y is the full vertical field of view.
    """

    radius: float
    azimuth: float
    elevation: float
    width: int
    height: int
    fov_y: float = 49.0
    look_at: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.float32))

    def __post_init__(self):
        self.look_at = np.asarray(self.look_at, dtype=np.float32).reshape(3)
        if not (self.radius > 0):
            raise InvalidParameterError("camera radius must be > 0")
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError("image dimensions must be >= 1")
        if not (0.0 < self.fov_y < 180.0):
            raise InvalidParameterError("fov_y must lie in (0, 180) degrees")

    @property
    def eye(self) -> np.ndarray:
        az = np.deg2rad(self.azimuth)
        el = np.deg2rad(self.elevation)
        offset = np.array(
            [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)],
            dtype=np.float64,
        )
        return self.look_at.astype(np.float64) + self.radius * offset

    @property
    def focal_px(self) -> float:
        """Focal length in pixels (square pixels, shared by both axes)."""
        return 0.5 * self.height / np.tan(0.5 * np.deg2rad(self.fov_y))

    def world_to_camera(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows of R map world axes to (right, down, forward); t_cam = R @ (p - eye)."""
        eye = self.eye
        forward = self.look_at.astype(np.float64) - eye
        norm = np.linalg.norm(forward)
        if norm < 1e-12:
            raise InvalidParameterError("camera eye coincides with look_at")
        forward = forward / norm
        world_up = np.array([0.0, 0.0, 1.0])
        right = np.cross(forward, world_up)
        rn = np.linalg.norm(right)
        if rn < 1e-9:
            # Looking straight up/down: pick a stable right axis.
            right = np.array([1.0, 0.0, 0.0])
        else:
            right = right / rn
        down = np.cross(forward, right)
        rot = np.stack([right, down, forward], axis=0)
        return rot, eye

    def resized(self, width: int, height: int) -> "Camera":
        return Camera(self.radius, self.azimuth, self.elevation, width, height,
                      self.fov_y, self.look_at.copy())


@dataclass
class Aabb:
    """Axis-aligned bounding box."""

    min_bound: np.ndarray
    max_bound: np.ndarray

    def __post_init__(self):
        self.min_bound = np.asarray(self.min_bound, dtype=np.float32).reshape(3)
        self.max_bound = np.asarray(self.max_bound, dtype=np.float32).reshape(3)
        if not (self.min_bound <= self.max_bound).all():
            raise InvalidParameterError("min_bound must be <= max_bound component-wise")

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min_bound + self.max_bound)

    @property
    def extent(self) -> np.ndarray:
        return self.max_bound - self.min_bound

    def scaled(self, factor: float) -> "Aabb":
        """Expand (or shrink) about the box center by a multiplicative factor."""
        if not (factor > 0):
            raise InvalidParameterError("scale factor must be > 0")
        c = self.center
        half = 0.5 * factor * self.extent
        return Aabb(c - half, c + half)


def aabb_of(points: np.ndarray) -> Aabb:
    """Component-wise min/max bounding box of an (M, 3) point set."""
    pts = np.asarray(points, dtype=np.float32)
    if pts.size == 0:
        raise EmptyInputError("aabb_of requires at least one point")
    pts = pts.reshape(-1, 3)
    return Aabb(pts.min(axis=0), pts.max(axis=0))
