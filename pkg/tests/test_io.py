import numpy as np
import pytest

from splatforge.core.types import ColoredPointCloud, TriangleMesh
from splatforge.errors import ObjParseError, PlyParseError
from splatforge.io import (
    read_gaussian_ply,
    read_mesh_ply,
    read_obj,
    read_point_cloud_ply,
    write_gaussian_ply,
    write_mesh_ply,
    write_point_cloud_ply,
)

from conftest import random_cloud


def make_pc(rng, n=50):
    return ColoredPointCloud(rng.normal(size=(n, 3)).astype(np.float32),
                             rng.random((n, 3)).astype(np.float32))


class TestPointCloudPly:
    @pytest.mark.parametrize("binary", [True, False])
    def test_positions_bit_exact_round_trip(self, tmp_path, rng, binary):
        pc = make_pc(rng)
        path = tmp_path / "pc.ply"
        write_point_cloud_ply(path, pc, binary=binary, color_dtype="float")
        back = read_point_cloud_ply(path)
        np.testing.assert_array_equal(back.positions, pc.positions)
        np.testing.assert_array_equal(back.colors, pc.colors)

    def test_uchar_colors_quantize(self, tmp_path, rng):
        pc = make_pc(rng)
        path = tmp_path / "pc8.ply"
        write_point_cloud_ply(path, pc, binary=True, color_dtype="uchar")
        back = read_point_cloud_ply(path)
        np.testing.assert_array_equal(back.positions, pc.positions)
        assert np.abs(back.colors - pc.colors).max() <= 0.5 / 255.0 + 1e-7

    def test_missing_colors_raises(self, tmp_path):
        path = tmp_path / "bare.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 1\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "end_header\n0 0 0\n")
        with pytest.raises(PlyParseError):
            read_point_cloud_ply(path)

    def test_truncated_binary_reports_offset(self, tmp_path, rng):
        pc = make_pc(rng, 10)
        path = tmp_path / "trunc.ply"
        write_point_cloud_ply(path, pc, binary=True, color_dtype="float")
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(PlyParseError) as err:
            read_point_cloud_ply(path)
        assert err.value.byte_offset is not None

    def test_not_a_ply(self, tmp_path):
        path = tmp_path / "nope.ply"
        path.write_text("OFF\n0 0 0\n")
        with pytest.raises(PlyParseError):
            read_point_cloud_ply(path)


class TestMeshPly:
    @pytest.mark.parametrize("binary", [True, False])
    def test_round_trip(self, tmp_path, rng, binary):
        mesh = TriangleMesh(
            vertices=rng.normal(size=(8, 3)).astype(np.float32),
            faces=np.array([[0, 1, 2], [2, 3, 4], [4, 5, 6]]),
            vertex_colors=rng.random((8, 3)).astype(np.float32),
        )
        path = tmp_path / "mesh.ply"
        write_mesh_ply(path, mesh, binary=binary)
        back = read_mesh_ply(path)
        np.testing.assert_array_equal(back.vertices, mesh.vertices)
        np.testing.assert_array_equal(back.faces, mesh.faces)
        assert back.has_colors

    def test_quad_fan_triangulation(self, tmp_path):
        path = tmp_path / "quad.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 4\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
            "0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
        mesh = read_mesh_ply(path)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])


class TestGaussianPly:
    def test_bit_exact_round_trip(self, tmp_path, rng):
        cloud = random_cloud(rng, 100)
        path = tmp_path / "splats.ply"
        write_gaussian_ply(path, cloud)
        back = read_gaussian_ply(path)
        np.testing.assert_array_equal(back.positions, cloud.positions)
        np.testing.assert_array_equal(back.colors_dc, cloud.colors_dc)
        np.testing.assert_array_equal(back.opacities_raw, cloud.opacities_raw)
        np.testing.assert_array_equal(back.scales_raw, cloud.scales_raw)
        np.testing.assert_array_equal(back.rotations, cloud.rotations)

    def test_rewrite_is_byte_identical(self, tmp_path, rng):
        cloud = random_cloud(rng, 32)
        p1, p2 = tmp_path / "a.ply", tmp_path / "b.ply"
        write_gaussian_ply(p1, cloud)
        write_gaussian_ply(p2, read_gaussian_ply(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_missing_fields_rejected(self, tmp_path, rng):
        path = tmp_path / "pc.ply"
        write_point_cloud_ply(path, make_pc(rng, 4))
        with pytest.raises(PlyParseError):
            read_gaussian_ply(path)


class TestObj:
    def test_vertices_faces_colors(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text(
            "# comment\n"
            "v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 0 1 0 0 0 1\nv 1 1 0 0.5 0.5 0.5\n"
            "f 1 2 3\nf 2/1 4/2/3 3//1\n")
        mesh = read_obj(path)
        assert mesh.vertices.shape == (4, 3)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [1, 3, 2]])
        assert mesh.has_colors
        np.testing.assert_allclose(mesh.vertex_colors[0], [1, 0, 0])

    def test_negative_indices_and_polygons(self, tmp_path):
        path = tmp_path / "poly.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n")
        mesh = read_obj(path)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])

    def test_no_colors(self, tmp_path):
        path = tmp_path / "plain.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        assert not read_obj(path).has_colors

    def test_malformed_face(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 x 3\n")
        with pytest.raises(ObjParseError):
            read_obj(path)
