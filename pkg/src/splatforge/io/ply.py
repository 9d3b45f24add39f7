"""PLY reading and writing.

Supported flavors:
  - colored point clouds: x,y,z + red,green,blue (uint8 or float), ascii or
    binary little-endian
  - triangle meshes: vertex element as above (colors optional) plus a face
    element with a vertex_indices list
  - gaussian splat assets: binary little-endian vertex element with
    x,y,z, f_dc_0..2, opacity (raw logit), scale_0..2 (raw log), rot_0..3,
    the layout stock splat viewers read

Parse failures raise PlyParseError carrying the byte offset.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from splatforge.core.types import ColoredPointCloud, GaussianCloud, TriangleMesh
from splatforge.errors import PlyParseError

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class _Element:
    def __init__(self, name: str, count: int):
        self.name = name
        self.count = count
        self.properties: list[tuple] = []  # ("scalar", name, dtype) | ("list", name, cdtype, vdtype)


def _parse_header(raw: bytes):
    end = raw.find(b"end_header\n")
    if end < 0:
        raise PlyParseError("missing end_header", 0)
    body_start = end + len(b"end_header\n")
    lines = raw[:end].decode("ascii", errors="replace").splitlines()
    if not lines or lines[0].strip() != "ply":
        raise PlyParseError("not a PLY file (missing magic)", 0)

    fmt = None
    elements: list[_Element] = []
    offset = 0
    for line in lines:
        stripped = line.strip()
        tok = stripped.split()
        if not tok or tok[0] == "comment":
            pass
        elif tok[0] == "ply":
            pass
        elif tok[0] == "format":
            if len(tok) < 2 or tok[1] not in ("ascii", "binary_little_endian"):
                raise PlyParseError(f"unsupported format {stripped!r}", offset)
            fmt = tok[1]
        elif tok[0] == "element":
            if len(tok) != 3:
                raise PlyParseError(f"malformed element line {stripped!r}", offset)
            try:
                elements.append(_Element(tok[1], int(tok[2])))
            except ValueError:
                raise PlyParseError(f"bad element count in {stripped!r}", offset) from None
        elif tok[0] == "property":
            if not elements:
                raise PlyParseError("property before any element", offset)
            if tok[1] == "list":
                if len(tok) != 5 or tok[2] not in _SCALAR_TYPES or tok[3] not in _SCALAR_TYPES:
                    raise PlyParseError(f"malformed list property {stripped!r}", offset)
                elements[-1].properties.append(
                    ("list", tok[4], _SCALAR_TYPES[tok[2]], _SCALAR_TYPES[tok[3]]))
            else:
                if len(tok) != 3 or tok[1] not in _SCALAR_TYPES:
                    raise PlyParseError(f"unsupported property {stripped!r}", offset)
                elements[-1].properties.append(("scalar", tok[2], _SCALAR_TYPES[tok[1]]))
        else:
            raise PlyParseError(f"unrecognized header line {stripped!r}", offset)
        offset += len(line.encode("ascii", errors="replace")) + 1
    if fmt is None:
        raise PlyParseError("header missing format line", 0)
    return fmt, elements, body_start


def _read_binary_element(raw: bytes, pos: int, elem: _Element):
    has_list = any(p[0] == "list" for p in elem.properties)
    if not has_list:
        dtype = np.dtype([(p[1], "<" + p[2]) for p in elem.properties])
        need = dtype.itemsize * elem.count
        if pos + need > len(raw):
            raise PlyParseError(f"truncated data for element {elem.name!r}", pos)
        data = np.frombuffer(raw, dtype=dtype, count=elem.count, offset=pos)
        return {p[1]: data[p[1]] for p in elem.properties}, pos + need

    # List properties force a row-wise walk.
    columns: dict[str, list] = {p[1]: [] for p in elem.properties}
    for _ in range(elem.count):
        for p in elem.properties:
            if p[0] == "scalar":
                dt = np.dtype("<" + p[2])
                if pos + dt.itemsize > len(raw):
                    raise PlyParseError(f"truncated row in element {elem.name!r}", pos)
                columns[p[1]].append(np.frombuffer(raw, dt, 1, pos)[0])
                pos += dt.itemsize
            else:
                cdt = np.dtype("<" + p[2])
                vdt = np.dtype("<" + p[3])
                if pos + cdt.itemsize > len(raw):
                    raise PlyParseError(f"truncated list count in element {elem.name!r}", pos)
                n = int(np.frombuffer(raw, cdt, 1, pos)[0])
                pos += cdt.itemsize
                if pos + n * vdt.itemsize > len(raw):
                    raise PlyParseError(f"truncated list values in element {elem.name!r}", pos)
                columns[p[1]].append(np.frombuffer(raw, vdt, n, pos).copy())
                pos += n * vdt.itemsize
    return columns, pos


def _read_ascii_element(lines: list[bytes], li: int, pos_of_line, elem: _Element):
    columns: dict[str, list] = {p[1]: [] for p in elem.properties}
    for _ in range(elem.count):
        if li >= len(lines):
            raise PlyParseError(f"truncated data for element {elem.name!r}", pos_of_line(li))
        tok = lines[li].split()
        k = 0
        try:
            for p in elem.properties:
                if p[0] == "scalar":
                    columns[p[1]].append(float(tok[k])); k += 1
                else:
                    n = int(tok[k]); k += 1
                    columns[p[1]].append(np.array([float(t) for t in tok[k:k + n]],
                                                  dtype="<" + p[3]))
                    if len(columns[p[1]][-1]) != n:
                        raise IndexError
                    k += n
        except (ValueError, IndexError):
            raise PlyParseError(f"malformed ascii row in element {elem.name!r}",
                                pos_of_line(li)) from None
        li += 1
    for p in elem.properties:
        if p[0] == "scalar":
            columns[p[1]] = np.array(columns[p[1]], dtype="<" + p[2])
    return columns, li


def read_ply_elements(path) -> dict[str, dict[str, np.ndarray]]:
    """Parse a PLY file into {element: {property: array}}; list columns stay ragged."""
    raw = Path(path).read_bytes()
    fmt, elements, body_start = _parse_header(raw)
    out: dict[str, dict[str, np.ndarray]] = {}
    if fmt == "binary_little_endian":
        pos = body_start
        for elem in elements:
            out[elem.name], pos = _read_binary_element(raw, pos, elem)
    else:
        body = raw[body_start:]
        lines = body.splitlines()
        starts = []
        acc = body_start
        for ln in lines:
            starts.append(acc)
            acc += len(ln) + 1
        li = 0
        for elem in elements:
            out[elem.name], li = _read_ascii_element(
                lines, li, lambda i: starts[i] if i < len(starts) else len(raw), elem)
    return out


def _vertex_positions(vertex: dict, path) -> np.ndarray:
    for key in ("x", "y", "z"):
        if key not in vertex:
            raise PlyParseError(f"{path}: vertex element missing property {key!r}", None)
    return np.stack([np.asarray(vertex[k], np.float32) for k in ("x", "y", "z")], axis=1)


def _vertex_colors(vertex: dict) -> np.ndarray | None:
    if not all(k in vertex for k in ("red", "green", "blue")):
        return None
    cols = np.stack([np.asarray(vertex[k]) for k in ("red", "green", "blue")], axis=1)
    if cols.dtype.kind in "ui":
        return (cols.astype(np.float32) / 255.0).astype(np.float32)
    return np.clip(cols.astype(np.float32), 0.0, 1.0)


def read_point_cloud_ply(path) -> ColoredPointCloud:
    elems = read_ply_elements(path)
    if "vertex" not in elems:
        raise PlyParseError(f"{path}: no vertex element", None)
    vertex = elems["vertex"]
    positions = _vertex_positions(vertex, path)
    colors = _vertex_colors(vertex)
    if colors is None:
        raise PlyParseError(f"{path}: vertex element has no red/green/blue colors", None)
    return ColoredPointCloud(positions, colors)


def read_mesh_ply(path) -> TriangleMesh:
    elems = read_ply_elements(path)
    if "vertex" not in elems or "face" not in elems:
        raise PlyParseError(f"{path}: mesh needs vertex and face elements", None)
    vertex = elems["vertex"]
    positions = _vertex_positions(vertex, path)
    colors = _vertex_colors(vertex)
    face = elems["face"]
    idx_key = "vertex_indices" if "vertex_indices" in face else "vertex_index"
    if idx_key not in face:
        raise PlyParseError(f"{path}: face element missing vertex_indices", None)
    tris = []
    for row in face[idx_key]:
        row = np.asarray(row, dtype=np.int64)
        if len(row) < 3:
            raise PlyParseError(f"{path}: face with fewer than 3 vertices", None)
        for k in range(1, len(row) - 1):  # fan-triangulate polygons
            tris.append((row[0], row[k], row[k + 1]))
    return TriangleMesh(positions, np.array(tris, dtype=np.int64).reshape(-1, 3), colors)


def write_point_cloud_ply(path, pc: ColoredPointCloud, binary: bool = True,
                          color_dtype: str = "uchar"):
    """Write x,y,z float32 + red,green,blue. color_dtype: 'uchar' or 'float'."""
    n = pc.num_points
    header = ["ply",
              f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    if color_dtype == "uchar":
        header += [f"property uchar {c}" for c in ("red", "green", "blue")]
        cols = np.clip(np.rint(pc.colors * 255.0), 0, 255).astype(np.uint8)
        dtype = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                          ("red", "u1"), ("green", "u1"), ("blue", "u1")])
    elif color_dtype == "float":
        header += [f"property float {c}" for c in ("red", "green", "blue")]
        cols = pc.colors.astype(np.float32)
        dtype = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                          ("red", "<f4"), ("green", "<f4"), ("blue", "<f4")])
    else:
        raise ValueError(f"color_dtype must be 'uchar' or 'float', got {color_dtype!r}")
    header.append("end_header")

    rec = np.empty(n, dtype=dtype)
    rec["x"], rec["y"], rec["z"] = pc.positions[:, 0], pc.positions[:, 1], pc.positions[:, 2]
    rec["red"], rec["green"], rec["blue"] = cols[:, 0], cols[:, 1], cols[:, 2]
    _write_rows(path, header, rec, binary)


def write_mesh_ply(path, mesh: TriangleMesh, binary: bool = True):
    n, f = mesh.vertices.shape[0], mesh.faces.shape[0]
    header = ["ply",
              f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    fields = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    if mesh.has_colors:
        header += [f"property uchar {c}" for c in ("red", "green", "blue")]
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    header += [f"element face {f}", "property list uchar int vertex_indices", "end_header"]

    rec = np.empty(n, dtype=np.dtype(fields))
    rec["x"], rec["y"], rec["z"] = mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.vertices[:, 2]
    if mesh.has_colors:
        cols = np.clip(np.rint(mesh.vertex_colors * 255.0), 0, 255).astype(np.uint8)
        rec["red"], rec["green"], rec["blue"] = cols[:, 0], cols[:, 1], cols[:, 2]

    buf = io.BytesIO()
    buf.write(("\n".join(header) + "\n").encode("ascii"))
    if binary:
        buf.write(rec.tobytes())
        faces = mesh.faces.astype("<i4")
        counts = np.full((f, 1), 3, dtype="u1")
        rowbytes = b"".join(counts[i].tobytes() + faces[i].tobytes() for i in range(f))
        buf.write(rowbytes)
    else:
        for i in range(n):
            row = [repr(float(rec["x"][i])), repr(float(rec["y"][i])), repr(float(rec["z"][i]))]
            if mesh.has_colors:
                row += [str(int(rec[c][i])) for c in ("red", "green", "blue")]
            buf.write((" ".join(row) + "\n").encode("ascii"))
        for i in range(f):
            buf.write(f"3 {mesh.faces[i,0]} {mesh.faces[i,1]} {mesh.faces[i,2]}\n".encode("ascii"))
    Path(path).write_bytes(buf.getvalue())


_GAUSSIAN_FIELDS = ("x", "y", "z",
                    "f_dc_0", "f_dc_1", "f_dc_2",
                    "opacity",
                    "scale_0", "scale_1", "scale_2",
                    "rot_0", "rot_1", "rot_2", "rot_3")


def write_gaussian_ply(path, cloud: GaussianCloud):
    """Binary little-endian splat asset; raw (pre-activation) opacity and scales."""
    n = cloud.num_gaussians
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {f}" for f in _GAUSSIAN_FIELDS]
    header.append("end_header")
    rec = np.empty(n, dtype=np.dtype([(f, "<f4") for f in _GAUSSIAN_FIELDS]))
    rec["x"], rec["y"], rec["z"] = (cloud.positions[:, k] for k in range(3))
    for k in range(3):
        rec[f"f_dc_{k}"] = cloud.colors_dc[:, k]
        rec[f"scale_{k}"] = cloud.scales_raw[:, k]
    rec["opacity"] = cloud.opacities_raw[:, 0]
    for k in range(4):
        rec[f"rot_{k}"] = cloud.rotations[:, k]
    _write_rows(path, header, rec, binary=True)


def read_gaussian_ply(path) -> GaussianCloud:
    elems = read_ply_elements(path)
    if "vertex" not in elems:
        raise PlyParseError(f"{path}: no vertex element", None)
    vertex = elems["vertex"]
    missing = [f for f in _GAUSSIAN_FIELDS if f not in vertex]
    if missing:
        raise PlyParseError(f"{path}: splat PLY missing properties {missing}", None)
    col = lambda f: np.asarray(vertex[f], np.float32)
    return GaussianCloud(
        positions=np.stack([col("x"), col("y"), col("z")], axis=1),
        colors_dc=np.stack([col(f"f_dc_{k}") for k in range(3)], axis=1),
        opacities_raw=col("opacity")[:, None],
        scales_raw=np.stack([col(f"scale_{k}") for k in range(3)], axis=1),
        rotations=np.stack([col(f"rot_{k}") for k in range(4)], axis=1),
    )


def _write_rows(path, header: list[str], rec: np.ndarray, binary: bool):
    buf = io.BytesIO()
    buf.write(("\n".join(header) + "\n").encode("ascii"))
    if binary:
        buf.write(rec.tobytes())
    else:
        names = rec.dtype.names
        for i in range(len(rec)):
            parts = []
            for name in names:
                v = rec[name][i]
                parts.append(str(int(v)) if rec.dtype[name].kind in "ui" else repr(float(v)))
            buf.write((" ".join(parts) + "\n").encode("ascii"))
    Path(path).write_bytes(buf.getvalue())
