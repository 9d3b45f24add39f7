"""Gaussian initialization from coarse 3D-prior point clouds.

The seed cloud comes from an external prior service (or a mesh file). It is
densified by uniformly sampling candidates inside its bounding box and keeping
those within a small distance of a seed point; kept points take their nearest
seed's color plus a small uniform perturbation. The merged cloud then becomes
a GaussianCloud with opacity 0.1 and isotropic scales set to each point's
nearest-neighbor distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from splatforge.core.activations import MIN_SCALE, colors_to_sh_dc, inverse_sigmoid
from splatforge.core.types import ColoredPointCloud, GaussianCloud, TriangleMesh, aabb_of
from splatforge.errors import (
    EmptyInputError,
    InsufficientPointsError,
    InvalidParameterError,
    MissingAttributeError,
)

INIT_OPACITY = 0.1


@dataclass
class GrowConfig:
    """Knobs for noisy point growing and color perturbation.

    bbox_scale pads the candidate box about its center; values > 1 reproduce
    the fatter-asset ablation, 1.0 is the standard configuration.
    """

    num_candidates: int = 500_000
    keep_distance: float = 0.01
    perturb_max: float = 0.2
    bbox_scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_candidates < 0:
            raise InvalidParameterError("num_candidates must be >= 0")
        if not (self.keep_distance > 0):
            raise InvalidParameterError("keep_distance must be > 0")
        if self.perturb_max < 0:
            raise InvalidParameterError("perturb_max must be >= 0")
        if not (self.bbox_scale > 0):
            raise InvalidParameterError("bbox_scale must be > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "GrowConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown GrowConfig keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "num_candidates": self.num_candidates,
            "keep_distance": self.keep_distance,
            "perturb_max": self.perturb_max,
            "bbox_scale": self.bbox_scale,
            "rng_seed": self.rng_seed,
        }


def mesh_to_point_cloud(mesh: TriangleMesh) -> ColoredPointCloud:
    """Vertices and vertex colors as a point cloud, order preserved."""
    if not mesh.has_colors:
        raise MissingAttributeError(
            "mesh has no vertex colors; use random_colors for untextured meshes")
    return ColoredPointCloud(mesh.vertices.copy(), mesh.vertex_colors.copy())


def random_colors(positions: np.ndarray, rng_seed: int) -> ColoredPointCloud:
    """Uniform [0,1) colors for positions without texture (motion branch)."""
    positions = np.asarray(positions, dtype=np.float32).reshape(-1, 3)
    if positions.shape[0] == 0:
        raise EmptyInputError("random_colors requires at least one point")
    rng = np.random.default_rng(rng_seed)
    colors = rng.random((positions.shape[0], 3), dtype=np.float32)
    return ColoredPointCloud(positions.copy(), colors)


def grow_bounds(positions: np.ndarray, bbox_scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Candidate-box bounds: the positions' AABB padded about its center."""
    pos = np.asarray(positions, dtype=np.float64)
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    if bbox_scale == 1.0:
        return lo, hi
    center = 0.5 * (lo + hi)
    half = 0.5 * bbox_scale * (hi - lo)
    return center - half, center + half


def grow_and_perturb(pt_m: ColoredPointCloud, cfg: GrowConfig) -> ColoredPointCloud:
    """Noisy point growing and color perturbation around a seed cloud.

    Output is seeds followed by kept grown points. Every kept point lies
    strictly within cfg.keep_distance of its nearest seed; its color is that
    seed's color plus a per-channel offset in [0, perturb_max), clamped to
    [0, 1]. The seed KD-tree is built once; grown points never become seeds.
    """
    if pt_m.num_points == 0:
        raise EmptyInputError("grow_and_perturb requires a non-empty seed cloud")
    if cfg.num_candidates == 0:
        return ColoredPointCloud(pt_m.positions.copy(), pt_m.colors.copy())

    low, high = grow_bounds(pt_m.positions, cfg.bbox_scale)
    rng = np.random.default_rng(cfg.rng_seed)
    candidates = rng.uniform(low, high, size=(cfg.num_candidates, 3)).astype(np.float32)

    tree = cKDTree(pt_m.positions.astype(np.float64))
    dist, nearest = tree.query(candidates.astype(np.float64), k=1)
    keep = dist < cfg.keep_distance

    kept_pos = candidates[keep]
    seed_cols = pt_m.colors[nearest[keep]]
    offsets = (cfg.perturb_max * rng.random((kept_pos.shape[0], 3))).astype(np.float32)
    kept_cols = np.clip(seed_cols + offsets, 0.0, 1.0)

    return ColoredPointCloud(
        np.concatenate([pt_m.positions, kept_pos], axis=0),
        np.concatenate([pt_m.colors, kept_cols], axis=0),
    )


def center_at_origin(pt: ColoredPointCloud) -> tuple[ColoredPointCloud, np.ndarray]:
    """Subtract the positional mean; returns (shifted cloud, center)."""
    if pt.num_points == 0:
        raise EmptyInputError("center_at_origin requires a non-empty cloud")
    center = pt.positions.astype(np.float64).mean(axis=0)
    shifted = (pt.positions.astype(np.float64) - center).astype(np.float32)
    return ColoredPointCloud(shifted, pt.colors.copy()), center.astype(np.float32)


def add_ground_plane(pt: ColoredPointCloud, density: float = 4000.0,
                     margin: float = 0.2, rng_seed: int = 0) -> ColoredPointCloud:
    """Append a randomly colored ground layer at the cloud's minimum z.

    Covers the XY footprint expanded by `margin`, sampled uniformly at
    `density` points per unit area (at least one point).
    """
    if pt.num_points == 0:
        raise EmptyInputError("add_ground_plane requires a non-empty cloud")
    if not (density > 0):
        raise InvalidParameterError("ground density must be > 0")
    box = aabb_of(pt.positions)
    x0, y0 = box.min_bound[0] - margin, box.min_bound[1] - margin
    x1, y1 = box.max_bound[0] + margin, box.max_bound[1] + margin
    area = float(x1 - x0) * float(y1 - y0)
    count = max(1, int(round(density * area)))

    rng = np.random.default_rng(rng_seed)
    xy = rng.uniform([x0, y0], [x1, y1], size=(count, 2))
    ground = np.empty((count, 3), dtype=np.float32)
    ground[:, :2] = xy
    ground[:, 2] = box.min_bound[2]
    colors = rng.random((count, 3), dtype=np.float32)

    return ColoredPointCloud(
        np.concatenate([pt.positions, ground], axis=0),
        np.concatenate([pt.colors, colors], axis=0),
    )


def nearest_neighbor_distances(positions: np.ndarray) -> np.ndarray:
    """Distance from each point to its nearest other point (KD-tree)."""
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if pos.shape[0] < 2:
        raise InsufficientPointsError("nearest-neighbor distance needs M >= 2 points")
    tree = cKDTree(pos)
    dist, _ = tree.query(pos, k=2)
    return dist[:, 1]


def init_gaussians(pt: ColoredPointCloud) -> GaussianCloud:
    """Build the initial GaussianCloud from a merged point cloud.

    Colors become SH0 coefficients, opacity activates to 0.1 everywhere,
    scales are isotropic per-point nearest-neighbor distances (floored at
    MIN_SCALE), rotations start at identity.
    """
    m = pt.num_points
    if m < 2:
        raise InsufficientPointsError("init_gaussians needs at least 2 points")
    nn = np.maximum(nearest_neighbor_distances(pt.positions), MIN_SCALE)
    scales_raw = np.log(nn).astype(np.float32)[:, None].repeat(3, axis=1)
    opacity_raw = np.full((m, 1), inverse_sigmoid(INIT_OPACITY), dtype=np.float32)
    rotations = np.zeros((m, 4), dtype=np.float32)
    rotations[:, 0] = 1.0
    return GaussianCloud(
        positions=pt.positions.copy(),
        colors_dc=colors_to_sh_dc(pt.colors).astype(np.float32),
        opacities_raw=opacity_raw,
        scales_raw=scales_raw,
        rotations=rotations,
    )


def grow_report(pt_m: ColoredPointCloud, grown: ColoredPointCloud,
                cloud: GaussianCloud) -> dict:
    """Summary statistics for the init command's report JSON."""
    box = aabb_of(pt_m.positions)
    nn = np.exp(cloud.scales_raw[:, 0].astype(np.float64))
    return {
        "seed_count": int(pt_m.num_points),
        "grown_count": int(grown.num_points - pt_m.num_points),
        "total_count": int(grown.num_points),
        "bbox_min": [float(v) for v in box.min_bound],
        "bbox_max": [float(v) for v in box.max_bound],
        "nn_distance": {
            "min": float(nn.min()),
            "max": float(nn.max()),
            "mean": float(nn.mean()),
            "median": float(np.median(nn)),
        },
    }
