from splatforge.core.types import (
    Aabb,
    Camera,
    ColoredPointCloud,
    GaussianCloud,
    TriangleMesh,
    aabb_of,
)
from splatforge.core.activations import (
    SH0,
    activate_params,
    colors_to_sh_dc,
    covariance_from_scale_rotation,
    inverse_sigmoid,
    quat_normalize,
    sh_dc_to_colors,
    sigmoid,
)

__all__ = [
    "Aabb",
    "Camera",
    "ColoredPointCloud",
    "GaussianCloud",
    "TriangleMesh",
    "aabb_of",
    "SH0",
    "activate_params",
    "colors_to_sh_dc",
    "covariance_from_scale_rotation",
    "inverse_sigmoid",
    "quat_normalize",
    "sh_dc_to_colors",
    "sigmoid",
]
