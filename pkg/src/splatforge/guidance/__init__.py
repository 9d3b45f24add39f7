from splatforge.guidance.schedule import NoiseSchedule, add_noise, sample_timestep
from splatforge.guidance.sds import GuidanceRequest, sds_gradient
from splatforge.guidance.predictors import (
    MockNoisePredictor,
    RemoteNoisePredictor,
    camera_key,
)
from splatforge.guidance.protocol import decode_array, encode_array

__all__ = [
    "NoiseSchedule",
    "add_noise",
    "sample_timestep",
    "GuidanceRequest",
    "sds_gradient",
    "MockNoisePredictor",
    "RemoteNoisePredictor",
    "camera_key",
    "decode_array",
    "encode_array",
]
