"""Minimal OBJ reader: v / f records, optional per-vertex colors.

Vertex colors come from the extended form "v x y z r g b" some exporters
emit. Faces may use v, v/vt, v//vn or v/vt/vn references; only the vertex
index is kept, polygons are fan-triangulated, negative indices resolve
relative to the vertices seen so far.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from splatforge.core.types import TriangleMesh
from splatforge.errors import ObjParseError


def read_obj(path) -> TriangleMesh:
    vertices: list[tuple] = []
    colors: list[tuple] = []
    faces: list[tuple] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] == "v":
            vals = tok[1:]
            if len(vals) not in (3, 4, 6, 7):
                raise ObjParseError(f"{path}:{lineno}: malformed vertex record")
            try:
                xyz = tuple(float(v) for v in vals[:3])
            except ValueError:
                raise ObjParseError(f"{path}:{lineno}: non-numeric vertex") from None
            vertices.append(xyz)
            if len(vals) >= 6:
                colors.append(tuple(float(v) for v in vals[-3:]))
        elif tok[0] == "f":
            idx = []
            for ref in tok[1:]:
                head = ref.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ObjParseError(f"{path}:{lineno}: bad face reference {ref!r}") from None
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            if len(idx) < 3:
                raise ObjParseError(f"{path}:{lineno}: face with fewer than 3 vertices")
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
        # other records (vt, vn, usemtl, o, g, s, ...) are ignored

    if len(vertices) < 3:
        raise ObjParseError(f"{path}: fewer than 3 vertices")
    vertex_colors = None
    if colors:
        if len(colors) != len(vertices):
            raise ObjParseError(f"{path}: vertex colors present on only some vertices")
        vertex_colors = np.clip(np.array(colors, dtype=np.float32), 0.0, 1.0)
    return TriangleMesh(
        np.array(vertices, dtype=np.float32),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        vertex_colors,
    )
