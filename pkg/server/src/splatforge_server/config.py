"""Server configuration.

Model ids select the backing implementation: the synthetic/* families are
procedural, deterministic stand-ins that honor every wire contract and run
anywhere; real checkpoint ids (e.g. a diffusers pipeline id) are a deployment
concern wired up through the same adapter seam.
"""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass
class ServerConfig:
    model_2d: str = "synthetic/epsilon-v1"
    model_3d: str = "synthetic/prior-v1"
    device: str = "cpu"
    max_batch: int = 8
    port: int = 8401

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")

    @classmethod
    def from_env(cls) -> "ServerConfig":
        return cls(
            model_2d=os.environ.get("SPLATFORGE_SERVER_MODEL_2D", cls.model_2d),
            model_3d=os.environ.get("SPLATFORGE_SERVER_MODEL_3D", cls.model_3d),
            device=os.environ.get("SPLATFORGE_SERVER_DEVICE", cls.device),
            max_batch=int(os.environ.get("SPLATFORGE_SERVER_MAX_BATCH", cls.max_batch)),
            port=int(os.environ.get("SPLATFORGE_SERVER_PORT", cls.port)),
        )
