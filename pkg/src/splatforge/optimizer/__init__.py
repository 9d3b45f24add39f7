from splatforge.optimizer.config import CameraRanges, TrainConfig
from splatforge.optimizer.adam import Adam
from splatforge.optimizer.sampling import FixedViewSampler, OrbitSampler, sample_camera
from splatforge.optimizer.resample import downscale, upscale_adjoint
from splatforge.optimizer.loop import TrainResult, train

__all__ = [
    "CameraRanges",
    "TrainConfig",
    "Adam",
    "FixedViewSampler",
    "OrbitSampler",
    "sample_camera",
    "downscale",
    "upscale_adjoint",
    "TrainResult",
    "train",
]
