from splatforge.rasterizer.api import RenderContext, render, render_backward
from splatforge.rasterizer.backend import available_backends, get_backend
from splatforge.rasterizer.common import (
    DEFAULT_STOP_TRANSMITTANCE,
    SIGMA_CLAMP,
    RenderedImage,
    Splat2D,
)
from splatforge.rasterizer.projection import (
    ProjectedScene,
    gaussian_weight,
    project_cloud,
    project_gaussian,
)
from splatforge.rasterizer.reference import composite_ray, reference_render

__all__ = [
    "RenderContext",
    "render",
    "render_backward",
    "available_backends",
    "get_backend",
    "DEFAULT_STOP_TRANSMITTANCE",
    "SIGMA_CLAMP",
    "RenderedImage",
    "Splat2D",
    "ProjectedScene",
    "gaussian_weight",
    "project_cloud",
    "project_gaussian",
    "composite_ray",
    "reference_render",
]
