"""Procedural mesh generation and PLY serialization for the prior endpoint.

The text-to-3d branch yields a colored, prompt-seeded bumpy sphere; the
text-to-motion branch yields an untextured posed humanoid assembled from
ellipsoid parts. Both carry well over 1000 vertices and serialize to binary
little-endian PLY with x,y,z (+ red,green,blue uint8 when colored), the
layout the downstream reader consumes.
"""

from __future__ import annotations

import io

import numpy as np


def uv_sphere(rows: int = 36, cols: int = 48):
    """Unit sphere grid: (V, 3) vertices and (F, 3) faces."""
    thetas = np.linspace(0.0, np.pi, rows)
    phis = np.linspace(-np.pi, np.pi, cols, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    verts = np.stack([np.sin(tt) * np.cos(pp),
                      np.sin(tt) * np.sin(pp),
                      np.cos(tt)], axis=-1).reshape(-1, 3)
    faces = []
    for r in range(rows - 1):
        for c in range(cols):
            c2 = (c + 1) % cols
            a, b = r * cols + c, r * cols + c2
            d, e = (r + 1) * cols + c, (r + 1) * cols + c2
            faces.append((a, b, e))
            faces.append((a, e, d))
    return verts.astype(np.float64), np.asarray(faces, dtype=np.int64)


def bumpy_asset(prompt: str, seed: int):
    """Prompt-seeded blobby object with procedural vertex colors."""
    rng = np.random.default_rng((seed, abs(hash_prompt(prompt))))
    verts, faces = uv_sphere()
    radius = 0.45
    bump = np.zeros(len(verts))
    for _ in range(6):
        center = rng.normal(size=3)
        center /= np.linalg.norm(center)
        width = rng.uniform(0.2, 0.6)
        height = rng.uniform(-0.12, 0.2)
        d = np.linalg.norm(verts - center, axis=1)
        bump += height * np.exp(-(d / width) ** 2)
    positions = verts * (radius + bump)[:, None]

    base = rng.random(3) * 0.6 + 0.2
    freq = rng.uniform(4.0, 10.0, 3)
    colors = base + 0.35 * np.sin(freq * positions + rng.uniform(0, np.pi, 3))
    colors = np.clip(colors, 0.0, 1.0)
    return positions, colors, faces


def _ellipsoid_part(center, radii, tilt_axis, tilt_angle, rows=14, cols=18):
    verts, faces = uv_sphere(rows, cols)
    verts = verts * np.asarray(radii)
    axis = np.asarray(tilt_axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm > 1e-9:
        axis = axis / norm
        c, s = np.cos(tilt_angle), np.sin(tilt_angle)
        k = axis
        verts = (verts * c
                 + np.cross(np.broadcast_to(k, verts.shape), verts) * s
                 + k[None, :] * (verts @ k)[:, None] * (1 - c))
    return verts + np.asarray(center), faces


def posed_body(seed: int):
    """Untextured humanoid with seed-dependent limb pose; body axis +z."""
    rng = np.random.default_rng(seed)
    pose = rng.uniform(-0.9, 0.9, size=4)  # arm L/R, leg L/R swing angles
    parts = [
        _ellipsoid_part((0.0, 0.0, 0.62), (0.11, 0.11, 0.12), (0, 0, 1), 0.0),   # head
        _ellipsoid_part((0.0, 0.0, 0.25), (0.17, 0.12, 0.28), (0, 0, 1), 0.0),   # torso
        _ellipsoid_part((-0.22, 0.0, 0.28), (0.055, 0.055, 0.26), (0, 1, 0), pose[0]),
        _ellipsoid_part((0.22, 0.0, 0.28), (0.055, 0.055, 0.26), (0, 1, 0), pose[1]),
        _ellipsoid_part((-0.09, 0.0, -0.25), (0.07, 0.07, 0.3), (0, 1, 0), pose[2]),
        _ellipsoid_part((0.09, 0.0, -0.25), (0.07, 0.07, 0.3), (0, 1, 0), pose[3]),
    ]
    verts_list, faces_list, offset = [], [], 0
    for verts, faces in parts:
        verts_list.append(verts)
        faces_list.append(faces + offset)
        offset += len(verts)
    return np.vstack(verts_list), np.vstack(faces_list)


def hash_prompt(prompt: str) -> int:
    h = 2166136261
    for ch in prompt.encode("utf-8"):
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h


def mesh_to_ply_bytes(vertices: np.ndarray, faces: np.ndarray,
                      colors: np.ndarray | None) -> bytes:
    n, f = len(vertices), len(faces)
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    fields = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    if colors is not None:
        header += [f"property uchar {c}" for c in ("red", "green", "blue")]
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    header += [f"element face {f}", "property list uchar int vertex_indices",
               "end_header"]

    rec = np.empty(n, dtype=np.dtype(fields))
    v32 = vertices.astype("<f4")
    rec["x"], rec["y"], rec["z"] = v32[:, 0], v32[:, 1], v32[:, 2]
    if colors is not None:
        c8 = np.clip(np.rint(colors * 255.0), 0, 255).astype(np.uint8)
        rec["red"], rec["green"], rec["blue"] = c8[:, 0], c8[:, 1], c8[:, 2]

    buf = io.BytesIO()
    buf.write(("\n".join(header) + "\n").encode("ascii"))
    buf.write(rec.tobytes())
    face_rec = np.empty(f, dtype=np.dtype([("n", "u1"), ("idx", "<i4", (3,))]))
    face_rec["n"] = 3
    face_rec["idx"] = faces.astype("<i4")
    buf.write(face_rec.tobytes())
    return buf.getvalue()
