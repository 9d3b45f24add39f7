from splatforge.io.ply import (
    read_gaussian_ply,
    read_mesh_ply,
    read_point_cloud_ply,
    write_gaussian_ply,
    write_mesh_ply,
    write_point_cloud_ply,
)
from splatforge.io.obj import read_obj
from splatforge.io.images import write_png

__all__ = [
    "read_gaussian_ply",
    "read_mesh_ply",
    "read_point_cloud_ply",
    "write_gaussian_ply",
    "write_mesh_ply",
    "write_point_cloud_ply",
    "read_obj",
    "write_png",
]
