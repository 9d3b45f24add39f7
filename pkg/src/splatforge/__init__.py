"""splatforge: text-to-3D Gaussian splat generation.

Pipeline: a coarse point cloud from a 3D prior service seeds a Gaussian
cloud (noisy point growing + color perturbation), which a differentiable
CPU splatting renderer and score-distillation gradients then optimize into
a real-time-renderable splat asset.
"""

__version__ = "0.1.0"

from splatforge.core import (  # noqa: F401
    Aabb,
    Camera,
    ColoredPointCloud,
    GaussianCloud,
    TriangleMesh,
)
